#include "mctsbp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mctsbp::config {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string message_with_location(const std::string& source, int line, const std::string& msg) {
  if (line <= 0) return source + ": " + msg;
  return source + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(message_with_location(source, line, message)), line_(line) {}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile file;
  file.source_ = std::move(source);
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(file.source_, line_no, "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(file.source_, line_no, "empty section name");
      if (file.section_lines_.count(current)) {
        throw ConfigError(file.source_, line_no, "duplicate section [" + current + "]");
      }
      file.section_lines_[current] = line_no;
      file.sections_[current];
    } else {
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(file.source_, line_no, "expected 'key = value'");
      }
      if (current.empty()) {
        throw ConfigError(file.source_, line_no, "key outside of any [section]");
      }
      std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty()) throw ConfigError(file.source_, line_no, "empty key");
      auto& section = file.sections_[current];
      if (section.count(key)) {
        throw ConfigError(file.source_, line_no, "duplicate key '" + key + "' in [" + current + "]");
      }
      section[key] = Entry{value, line_no};
    }
    if (end == text.size()) break;
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void KeyValueFile::require_sections(const std::set<std::string>& allowed) const {
  for (const auto& [name, line] : section_lines_) {
    if (!allowed.count(name)) throw ConfigError(source_, line, "unknown section [" + name + "]");
  }
}

const KeyValueFile::Entry* KeyValueFile::find(const std::string& section,
                                              const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto e = s->second.find(key);
  return e == s->second.end() ? nullptr : &e->second;
}

void KeyValueFile::mark_used(const std::string& section, const std::string& key) const {
  used_.insert({section, key});
}

std::vector<std::pair<std::string, KeyValueFile::Entry>> KeyValueFile::unused(
    const std::string& section) const {
  std::vector<std::pair<std::string, Entry>> out;
  auto s = sections_.find(section);
  if (s == sections_.end()) return out;
  for (const auto& [key, entry] : s->second) {
    if (!used_.count({section, key})) out.emplace_back(key, entry);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.second.line < b.second.line; });
  return out;
}

std::vector<std::pair<std::string, KeyValueFile::Entry>> KeyValueFile::entries(
    const std::string& section) const {
  std::vector<std::pair<std::string, Entry>> out;
  auto s = sections_.find(section);
  if (s == sections_.end()) return out;
  out.assign(s->second.begin(), s->second.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.second.line < b.second.line; });
  return out;
}

void Section::expect_keys(const std::set<std::string>& known) const {
  for (const auto& [key, entry] : file_->entries(name_)) {
    if (!known.count(key)) {
      throw ConfigError(file_->source(), entry.line,
                        "unknown key '" + key + "' in [" + name_ + "]");
    }
  }
}

bool Section::has(const std::string& key) const { return file_->find(name_, key) != nullptr; }

void Section::fail(const std::string& key, const std::string& message) const {
  const auto* entry = file_->find(name_, key);
  throw ConfigError(file_->source(), entry ? entry->line : 0,
                    "[" + name_ + "] " + key + ": " + message);
}

std::string Section::get_string(const std::string& key, const std::string& fallback) const {
  const auto* entry = file_->find(name_, key);
  if (!entry) return fallback;
  file_->mark_used(name_, key);
  return entry->value;
}

std::string Section::require_string(const std::string& key) const {
  if (!has(key)) {
    throw ConfigError(file_->source(), 0, "[" + name_ + "] missing required key '" + key + "'");
  }
  return get_string(key, "");
}

double Section::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get_string(key, "");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    fail(key, "expected a finite number, got '" + text + "'");
  }
  return v;
}

long long Section::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get_string(key, "");
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t Section::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get_string(key, "");
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(key, "expected an unsigned 64-bit integer, got '" + text + "'");
  }
  return v;
}

bool Section::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string text = lower(get_string(key, ""));
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  fail(key, "expected true or false, got '" + text + "'");
}

std::vector<double> Section::get_list(const std::string& key) const {
  const std::string text = get_string(key, "");
  try {
    return parse_list(text);
  } catch (const std::invalid_argument& e) {
    fail(key, e.what());
  }
}

void Section::finish() const {
  auto extra = file_->unused(name_);
  if (!extra.empty()) {
    throw ConfigError(file_->source(), extra.front().second.line,
                      "unknown key '" + extra.front().first + "' in [" + name_ + "]");
  }
}

std::vector<double> parse_list(std::string_view text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw std::invalid_argument("unbalanced parenthesis in list");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = trim(item);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
      throw std::invalid_argument("bad list element '" + t + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string format_tuple(const std::vector<double>& values) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << '(';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << values[i];
  }
  os << ')';
  return os.str();
}

std::string format_double(double value) {
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return os.str();
}

namespace {

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

SyntheticTreeSpec read_synthetic_spec(const Section& section) {
  section.expect_keys({"kind", "branching", "depth", "leaf_win_prob", "trap_level", "trap_count",
                       "trap_prior", "seed", "trap_actions", "board"});
  SyntheticTreeSpec spec;
  spec.branching = static_cast<int>(section.get_int("branching", spec.branching));
  spec.depth = static_cast<int>(section.get_int("depth", spec.depth));
  spec.leaf_win_prob = section.get_double("leaf_win_prob", spec.leaf_win_prob);
  if (section.has("trap_level")) spec.trap_level = static_cast<int>(section.get_int("trap_level", 0));
  spec.trap_count = static_cast<int>(section.get_int("trap_count", spec.trap_level ? 1 : 0));
  spec.trap_prior = section.get_double("trap_prior", spec.trap_prior);
  spec.seed = section.get_u64("seed", spec.seed);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    section.fail("branching", e.what());
  }
  return spec;
}

GameDescriptor read_game(const Section& section) {
  const std::string kind = lower(section.require_string("kind"));
  if (kind == "tictactoe" || kind == "tic-tac-toe") {
    section.expect_keys({"kind", "board"});
    return TicTacToeGame{};
  }
  if (kind == "synthetic") return SyntheticGame{read_synthetic_spec(section)};
  section.fail("kind", "expected 'synthetic' or 'tictactoe', got '" + kind + "'");
}

SearchConfig read_search(const Section& section) {
  section.expect_keys({"simulations", "policy", "exploration", "seed", "evaluator", "noise_sd",
                       "noise_seed", "backup", "alpha", "coulom_x", "coulom_y",
                       "feedback_profile", "feedback_ratio", "feedback_horizon", "knots",
                       "horizon"});
  SearchConfig config;
  config.simulations = static_cast<int>(section.get_int("simulations", config.simulations));
  try {
    config.policy = parse_tree_policy(section.get_string("policy", to_string(config.policy)));
  } catch (const std::invalid_argument& e) {
    section.fail("policy", e.what());
  }
  config.exploration = section.get_double("exploration", config.exploration);
  config.seed = section.get_u64("seed", config.seed);

  const std::string evaluator = lower(section.get_string("evaluator", "rollout"));
  if (evaluator == "rollout" || evaluator == "random_rollout") {
    config.evaluator = RandomRollout{};
  } else if (evaluator == "noisy_oracle") {
    config.evaluator = NoisyOracle{section.get_double("noise_sd", 0.0),
                                   section.get_u64("noise_seed", 0)};
  } else {
    section.fail("evaluator", "expected 'rollout' or 'noisy_oracle'");
  }

  const std::string backup = lower(section.get_string("backup", "standard"));
  try {
    if (backup == "standard") {
      config.backup = StandardBackup{};
    } else if (backup == "erwa") {
      config.backup = ErwaBackup{section.get_double("alpha", ErwaBackup{}.alpha)};
    } else if (backup == "coulom") {
      config.backup = CoulomBackup{section.get_double("coulom_x", CoulomBackup{}.x),
                                   static_cast<int>(section.get_int("coulom_y", CoulomBackup{}.y))};
    } else if (backup == "feedback") {
      FeedbackBackup fb;
      fb.shape = parse_feedback_shape(section.get_string("feedback_profile", "GBY"));
      const bool geometric = fb.shape == FeedbackShape::kGAY || fb.shape == FeedbackShape::kGBY;
      fb.final_ratio = section.get_double("feedback_ratio", geometric ? 64.0 : 8.0);
      fb.horizon = static_cast<int>(section.get_int("feedback_horizon", config.simulations));
      config.backup = fb;
    } else if (backup == "monotone" || backup == "softmax") {
      const auto knots = section.get_list("knots");
      const int horizon = static_cast<int>(section.get_int("horizon", config.simulations));
      const double w0 = backup == "monotone" ? 1.0 : 0.0;
      auto profile = std::make_shared<const WeightProfile>(build_weight_table(knots, horizon, w0));
      if (backup == "monotone") {
        config.backup = MonotoneBackup{profile};
      } else {
        config.backup = SoftmaxBackup{profile};
      }
    } else {
      section.fail("backup",
                   "expected standard, erwa, coulom, feedback, monotone or softmax, got '" +
                       backup + "'");
    }
    config.validate();
  } catch (const std::invalid_argument& e) {
    section.fail("backup", e.what());
  }
  return config;
}

MatchSettings read_match(const Section& section) {
  section.expect_keys({"games", "sims_per_move", "seed"});
  MatchSettings m;
  m.games = static_cast<int>(section.get_int("games", m.games));
  m.sims_per_move = static_cast<int>(section.get_int("sims_per_move", m.sims_per_move));
  m.seed = section.get_u64("seed", m.seed);
  if (m.games < 1) section.fail("games", "must be >= 1");
  if (m.sims_per_move < 1) section.fail("sims_per_move", "must be >= 1");
  return m;
}

OptimizeSettings read_optimize(const Section& section, int default_games) {
  section.expect_keys({"kind", "objective", "knots", "lo", "hi", "n_init", "n_iter", "batch",
                       "candidates", "seed", "acquisition", "kappa", "noise_variance",
                       "fit_lengthscales", "horizon", "confirm_games", "quadratic_optimum",
                       "quadratic_noise_sd"});
  OptimizeSettings s;
  auto& opt = s.optimizer;
  const std::string kind = lower(section.get_string("kind", "softmax"));
  if (kind == "softmax") {
    s.kind = ProfileKind::kSoftmax;
  } else if (kind == "monotone") {
    s.kind = ProfileKind::kMonotone;
  } else {
    section.fail("kind", "expected 'softmax' or 'monotone'");
  }
  s.objective = lower(section.get_string("objective", s.objective));
  if (s.objective != "winrate" && s.objective != "quadratic") {
    section.fail("objective", "expected 'winrate' or 'quadratic'");
  }
  const int dims = static_cast<int>(section.get_int("knots", 6));
  if (dims < 2) section.fail("knots", "need at least 2 knots");
  const double lo = section.get_double("lo", -10.0);
  const double hi = section.get_double("hi", -4.0);
  if (!(hi > lo)) section.fail("hi", "box must satisfy lo < hi");
  opt.bounds.assign(static_cast<std::size_t>(dims), {lo, hi});
  opt.n_init = static_cast<int>(section.get_int("n_init", opt.n_init));
  opt.n_iter = static_cast<int>(section.get_int("n_iter", opt.n_iter));
  opt.batch = static_cast<int>(section.get_int("batch", opt.batch));
  opt.candidate_count = static_cast<int>(section.get_int("candidates", opt.candidate_count));
  opt.seed = section.get_u64("seed", opt.seed);
  const std::string acq = lower(section.get_string("acquisition", "ei"));
  if (acq == "ei") {
    opt.acquisition.kind = gp::AcquisitionKind::kExpectedImprovement;
  } else if (acq == "ucb") {
    opt.acquisition.kind = gp::AcquisitionKind::kUpperConfidenceBound;
  } else {
    section.fail("acquisition", "expected 'ei' or 'ucb'");
  }
  opt.acquisition.kappa = section.get_double("kappa", opt.acquisition.kappa);
  opt.noise_variance = section.get_double("noise_variance", 0.25 / std::max(1, default_games));
  opt.fit_lengthscales = section.get_bool("fit_lengthscales", opt.fit_lengthscales);
  s.horizon = static_cast<int>(section.get_int("horizon", 0));
  s.confirm_games = static_cast<int>(section.get_int("confirm_games", 0));
  if (s.objective == "quadratic") {
    if (section.has("quadratic_optimum")) {
      s.quadratic_optimum = section.get_list("quadratic_optimum");
      if (s.quadratic_optimum.size() != static_cast<std::size_t>(dims)) {
        section.fail("quadratic_optimum", "needs one value per knot");
      }
    } else {
      s.quadratic_optimum.assign(static_cast<std::size_t>(dims), 0.5 * (lo + hi));
    }
    s.quadratic_noise_sd = section.get_double("quadratic_noise_sd", s.quadratic_noise_sd);
  }
  try {
    opt.validate();
  } catch (const std::invalid_argument& e) {
    section.fail("n_iter", e.what());
  }
  return s;
}

ProfileSettings read_profile(const Section& section) {
  section.expect_keys({"knots", "horizon", "w0"});
  ProfileSettings p;
  p.knots = section.get_list("knots");
  p.horizon = static_cast<int>(section.get_int("horizon", 0));
  p.w0 = section.get_double("w0", p.w0);
  if (p.horizon < 1) section.fail("horizon", "must be >= 1");
  return p;
}

void write_synthetic_spec(std::ostream& os, const SyntheticTreeSpec& spec) {
  os << "kind = synthetic\n"
     << "branching = " << spec.branching << "\n"
     << "depth = " << spec.depth << "\n"
     << "leaf_win_prob = " << format_double(spec.leaf_win_prob) << "\n";
  if (spec.trap_level) {
    os << "trap_level = " << *spec.trap_level << "\n"
       << "trap_count = " << spec.trap_count << "\n";
  }
  os << "trap_prior = " << format_double(spec.trap_prior) << "\n"
     << "seed = " << spec.seed << "\n";
}

void write_game(std::ostream& os, const GameDescriptor& game) {
  os << "[game]\n";
  if (const auto* synthetic = std::get_if<SyntheticGame>(&game)) {
    write_synthetic_spec(os, synthetic->spec);
  } else {
    os << "kind = tictactoe\n";
  }
}

void write_search(std::ostream& os, const std::string& name, const SearchConfig& config) {
  os << "[" << name << "]\n"
     << "simulations = " << config.simulations << "\n"
     << "policy = " << to_string(config.policy) << "\n"
     << "exploration = " << format_double(config.exploration) << "\n"
     << "seed = " << config.seed << "\n";
  if (const auto* oracle = std::get_if<NoisyOracle>(&config.evaluator)) {
    os << "evaluator = noisy_oracle\n"
       << "noise_sd = " << format_double(oracle->noise_sd) << "\n"
       << "noise_seed = " << oracle->seed << "\n";
  } else {
    os << "evaluator = rollout\n";
  }
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, StandardBackup>) {
          os << "backup = standard\n";
        } else if constexpr (std::is_same_v<T, ErwaBackup>) {
          os << "backup = erwa\nalpha = " << format_double(b.alpha) << "\n";
        } else if constexpr (std::is_same_v<T, CoulomBackup>) {
          os << "backup = coulom\ncoulom_x = " << format_double(b.x) << "\ncoulom_y = " << b.y
             << "\n";
        } else if constexpr (std::is_same_v<T, FeedbackBackup>) {
          os << "backup = feedback\nfeedback_profile = " << to_string(b.shape)
             << "\nfeedback_ratio = " << format_double(b.final_ratio)
             << "\nfeedback_horizon = " << b.horizon << "\n";
        } else {
          os << "backup = " << (std::is_same_v<T, MonotoneBackup> ? "monotone" : "softmax")
             << "\nknots = " << format_list(b.profile->knots())
             << "\nhorizon = " << b.profile->horizon() << "\n";
        }
      },
      config.backup);
}

void write_match(std::ostream& os, const MatchSettings& match) {
  os << "[match]\n"
     << "games = " << match.games << "\n"
     << "sims_per_move = " << match.sims_per_move << "\n"
     << "seed = " << match.seed << "\n";
}

void write_optimize(std::ostream& os, const OptimizeSettings& s) {
  const auto& opt = s.optimizer;
  os << "[optimize]\n"
     << "kind = " << to_string(s.kind) << "\n"
     << "objective = " << s.objective << "\n"
     << "knots = " << opt.bounds.size() << "\n"
     << "lo = " << format_double(opt.bounds.front().first) << "\n"
     << "hi = " << format_double(opt.bounds.front().second) << "\n"
     << "n_init = " << opt.n_init << "\n"
     << "n_iter = " << opt.n_iter << "\n"
     << "batch = " << opt.batch << "\n"
     << "candidates = " << opt.candidate_count << "\n"
     << "acquisition = "
     << (opt.acquisition.kind == gp::AcquisitionKind::kExpectedImprovement ? "ei" : "ucb") << "\n"
     << "kappa = " << format_double(opt.acquisition.kappa) << "\n"
     << "noise_variance = " << format_double(opt.noise_variance) << "\n"
     << "fit_lengthscales = " << (opt.fit_lengthscales ? "true" : "false") << "\n"
     << "horizon = " << s.horizon << "\n"
     << "confirm_games = " << s.confirm_games << "\n"
     << "seed = " << opt.seed << "\n";
  if (s.objective == "quadratic") {
    os << "quadratic_optimum = " << format_list(s.quadratic_optimum) << "\n"
       << "quadratic_noise_sd = " << format_double(s.quadratic_noise_sd) << "\n";
  }
}

void write_profile(std::ostream& os, const ProfileSettings& p) {
  os << "[profile]\n"
     << "knots = " << format_list(p.knots) << "\n"
     << "horizon = " << p.horizon << "\n"
     << "w0 = " << format_double(p.w0) << "\n";
}

}  // namespace mctsbp::config
