// Command-line front end: gen-game, analyze, tournament, optimize,
// dump-profile. Every run writes its outputs plus manifest.ini under --out.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mctsbp/bayesopt.hpp"
#include "mctsbp/config.hpp"
#include "mctsbp/search.hpp"
#include "mctsbp/synthetic_tree.hpp"
#include "mctsbp/tictactoe.hpp"
#include "mctsbp/tournament.hpp"
#include "mctsbp/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mctsbp;
using config::ConfigError;
using config::KeyValueFile;
using config::Section;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Writes next to the target and renames, so readers never see a partial file.
void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double v) { return config::format_double(v); }

KeyValueFile load_config(const Options& opts, std::set<std::string> allowed) {
  KeyValueFile file = KeyValueFile::load(opts.config_path);
  // Manifests carry a [manifest] section so they can be fed back in as configs.
  allowed.insert("manifest");
  file.require_sections(allowed);
  return file;
}

void require_section(const KeyValueFile& file, const std::string& name) {
  if (!file.has_section(name)) {
    throw ConfigError(file.source(), 0, "missing required section [" + name + "]");
  }
}

std::string join_actions(const std::vector<int>& actions, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(actions[i]);
  }
  return out;
}

// The [game] section either describes the game inline or points at a
// gen-game descriptor with `file = path` (relative to the config file).
// A recorded `trap_actions` list is checked against the regenerated tree.
struct ResolvedGame {
  GameDescriptor game;
  std::optional<std::string> board;
};

void verify_trap_actions(const Section& section, const GameDescriptor& game) {
  if (!section.has("trap_actions")) return;
  const auto* synthetic = std::get_if<SyntheticGame>(&game);
  if (!synthetic) section.fail("trap_actions", "only valid for synthetic games");
  const std::string recorded = section.get_string("trap_actions", "");
  const auto root = generate_synthetic_tree(synthetic->spec);
  const std::string actual = join_actions(root->tree().trap_actions(), ", ");
  if (recorded != actual) {
    section.fail("trap_actions",
                 "descriptor says '" + recorded + "' but the spec generates '" + actual + "'");
  }
}

ResolvedGame read_game_section(const KeyValueFile& file, bool allow_board) {
  require_section(file, "game");
  const Section section = file.section("game");
  ResolvedGame out;
  if (section.has("file")) {
    fs::path ref = section.get_string("file", "");
    if (ref.is_relative()) ref = fs::path(file.source()).parent_path() / ref;
    KeyValueFile inner = KeyValueFile::load(ref);
    inner.require_sections({"game", "manifest"});
    const Section inner_game = inner.section("game");
    out.game = config::read_game(inner_game);
    verify_trap_actions(inner_game, out.game);
    inner_game.finish();
  } else {
    out.game = config::read_game(section);
    verify_trap_actions(section, out.game);
  }
  if (allow_board && section.has("board")) {
    out.board = section.get_string("board", "");
    if (std::holds_alternative<SyntheticGame>(out.game)) {
      section.fail("board", "only valid for tic-tac-toe");
    }
  }
  section.finish();
  return out;
}

std::string manifest_text(const std::string& subcommand, const Options& opts,
                          const std::string& resolved) {
  std::ostringstream os;
  os << "# Resolved configuration of this run. Feed it back with --config to\n"
     << "# reproduce the outputs.\n"
     << "[manifest]\n"
     << "subcommand = " << subcommand << "\n"
     << "version = " << kVersion << "\n"
     << "source_config = " << opts.config_path << "\n"
     << "workers = " << opts.workers << "\n"
     << "seed_override = " << (opts.seed ? std::to_string(*opts.seed) : "none") << "\n"
     << "\n"
     << resolved;
  return os.str();
}

fs::path prepare_out(const Options& opts) {
  fs::path out = opts.out_dir;
  fs::create_directories(out);
  return out;
}

// ---------------------------------------------------------------- gen-game

int cmd_gen_game(const Options& opts) {
  KeyValueFile file = load_config(opts, {"game"});
  ResolvedGame rg = read_game_section(file, false);
  if (auto* synthetic = std::get_if<SyntheticGame>(&rg.game); synthetic && opts.seed) {
    synthetic->spec.seed = *opts.seed;
  }

  std::ostringstream desc;
  config::write_game(desc, rg.game);
  std::string summary;
  if (const auto* synthetic = std::get_if<SyntheticGame>(&rg.game)) {
    const auto root = generate_synthetic_tree(synthetic->spec);
    const auto& traps = root->tree().trap_actions();
    if (!traps.empty()) desc << "trap_actions = " << join_actions(traps, ", ") << "\n";
    const auto values = minimax_child_values(*root);
    desc << "# root minimax value " << num(minimax_value(*root)) << "; root action values";
    for (double v : values) desc << ' ' << num(v);
    desc << "\n";
    summary = "synthetic tree, " + std::to_string(root->tree().node_count()) + " nodes, traps [" +
              join_actions(traps, ", ") + "]";
  } else {
    summary = "tic-tac-toe";
  }

  const fs::path out = prepare_out(opts);
  atomic_write(out / "game.ini", desc.str());
  atomic_write(out / "manifest.ini", manifest_text("gen-game", opts, desc.str()));
  std::cout << summary << "\n" << (out / "game.ini").string() << "\n";
  return 0;
}

// ----------------------------------------------------------------- analyze

int cmd_analyze(const Options& opts) {
  KeyValueFile file = load_config(opts, {"game", "search"});
  ResolvedGame rg = read_game_section(file, true);
  require_section(file, "search");
  const Section search_section = file.section("search");
  SearchConfig search = config::read_search(search_section);
  search_section.finish();
  if (opts.seed) search.seed = *opts.seed;

  StatePtr root;
  if (const auto* synthetic = std::get_if<SyntheticGame>(&rg.game)) {
    root = generate_synthetic_tree(synthetic->spec);
  } else if (rg.board) {
    try {
      root = TicTacToeState::parse(*rg.board);
    } catch (const std::invalid_argument& e) {
      file.section("game").fail("board", e.what());
    }
  } else {
    root = TicTacToeState::empty_board();
  }
  if (root->is_terminal()) file.section("game").fail("board", "position is already decided");

  SearchTree tree(root, search);
  const SearchResult result = tree.run();

  std::ostringstream csv;
  csv << "action,visits,q,prior,minimax\n";
  for (const auto& child : tree.children(tree.root())) {
    const auto state = root->apply(child.action);
    const auto exact = state->known_value();
    csv << child.action << ',' << child.visits << ',' << num(child.q) << ',' << num(child.prior)
        << ',' << (exact ? num(*exact) : std::string()) << '\n';
  }

  json j;
  j["position"] = root->describe();
  j["simulations"] = search.simulations;
  j["backup"] = strategy_name(search.backup);
  j["best_action"] = result.best_action;
  j["root_q"] = result.root_q;
  json dist = json::array();
  for (const auto& [a, n] : result.visit_distribution) dist.push_back({{"action", a}, {"visits", n}});
  j["visit_distribution"] = dist;
  j["principal_variation"] = result.principal_variation;

  std::ostringstream resolved;
  if (rg.board) {
    resolved << "[game]\nkind = tictactoe\nboard = " << *rg.board << "\n";
  } else {
    config::write_game(resolved, rg.game);
  }
  resolved << "\n";
  config::write_search(resolved, "search", search);

  const fs::path out = prepare_out(opts);
  atomic_write(out / "analyze.csv", csv.str());
  atomic_write(out / "result.json", j.dump(2) + "\n");
  atomic_write(out / "manifest.ini", manifest_text("analyze", opts, resolved.str()));
  std::cout << "best_action " << result.best_action << "  root_q " << num(result.root_q)
            << "  pv " << join_actions(result.principal_variation, " ") << "\n"
            << csv.str();
  return 0;
}

// -------------------------------------------------------------- tournament

json match_json(const MatchResult& m) {
  json j;
  j["games"] = m.total();
  j["wins_a"] = m.wins_a;
  j["wins_b"] = m.wins_b;
  j["draws"] = m.draws;
  j["win_rate_a"] = m.win_rate_a;
  j["ci95"] = {m.ci95.first, m.ci95.second};
  return j;
}

int cmd_tournament(const Options& opts) {
  KeyValueFile file = load_config(opts, {"game", "engine_a", "engine_b", "match"});
  ResolvedGame rg = read_game_section(file, false);
  require_section(file, "engine_a");
  require_section(file, "engine_b");
  const Section sa = file.section("engine_a");
  const Section sb = file.section("engine_b");
  const Section sm = file.section("match");
  MatchConfig match;
  match.game = rg.game;
  match.engine_a = config::read_search(sa);
  match.engine_b = config::read_search(sb);
  config::MatchSettings ms = config::read_match(sm);
  sa.finish();
  sb.finish();
  sm.finish();
  if (opts.seed) ms.seed = *opts.seed;
  match.games = ms.games;
  match.sims_per_move = ms.sims_per_move;
  match.seed = ms.seed;

  const MatchResult result = run_match(match, opts.workers);

  std::ostringstream csv;
  csv << "game,position_seed,a_first,outcome,moves\n";
  for (const auto& g : result.games) {
    csv << g.index << ',' << g.position_seed << ',' << (g.a_first ? 1 : 0) << ','
        << to_string(g.outcome) << ',' << join_actions(g.moves, " ") << '\n';
  }
  json j = match_json(result);
  j["engine_a"] = strategy_name(match.engine_a.backup);
  j["engine_b"] = strategy_name(match.engine_b.backup);
  j["sims_per_move"] = match.sims_per_move;
  j["seed"] = match.seed;
  j["timestamp"] = utc_timestamp();

  std::ostringstream resolved;
  config::write_game(resolved, rg.game);
  resolved << "\n";
  config::write_search(resolved, "engine_a", match.engine_a);
  resolved << "\n";
  config::write_search(resolved, "engine_b", match.engine_b);
  resolved << "\n";
  config::write_match(resolved, ms);

  const fs::path out = prepare_out(opts);
  atomic_write(out / "games.csv", csv.str());
  atomic_write(out / "result.json", j.dump(2) + "\n");
  atomic_write(out / "manifest.ini", manifest_text("tournament", opts, resolved.str()));
  std::cout << "A " << result.wins_a << "  B " << result.wins_b << "  draws " << result.draws
            << "  win_rate_a " << num(result.win_rate_a) << "  ci95 [" << num(result.ci95.first)
            << ", " << num(result.ci95.second) << "]\n";
  return 0;
}

// ---------------------------------------------------------------- optimize

int cmd_optimize(const Options& opts) {
  KeyValueFile file = load_config(opts, {"game", "engine", "match", "optimize"});
  require_section(file, "optimize");
  const Section so = file.section("optimize");
  const Section sm = file.section("match");
  const config::MatchSettings ms = config::read_match(sm);
  config::OptimizeSettings settings = config::read_optimize(so, ms.games);
  so.finish();
  sm.finish();
  if (opts.seed) settings.optimizer.seed = *opts.seed;
  const bool winrate = settings.objective == "winrate";

  MatchConfig base;
  std::optional<ResolvedGame> rg;
  if (winrate) {
    rg = read_game_section(file, false);
    require_section(file, "engine");
    const Section se = file.section("engine");
    base.engine_a = config::read_search(se);
    se.finish();
    base.game = rg->game;
    base.games = ms.games;
    base.sims_per_move = ms.sims_per_move;
    base.seed = ms.seed;
  } else if (file.has_section("game") || file.has_section("engine")) {
    throw ConfigError(file.source(), 0,
                      "[game] and [engine] are only used by objective = winrate");
  }

  struct Row {
    double value;
    bool failed;
    std::string timestamp;
  };
  std::vector<Row> rows;
  std::uint64_t counter = 0;
  const auto evaluate = [&](const std::vector<double>& knots) -> double {
    double v;
    if (winrate) {
      try {
        v = winrate_objective(knots, settings.kind, base, settings.horizon, opts.workers);
      } catch (const std::exception& e) {
        std::cerr << "evaluation failed: " << e.what() << "\n";
        v = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < knots.size(); ++i) {
        const double d = knots[i] - settings.quadratic_optimum[i];
        s += d * d;
      }
      v = -s + settings.quadratic_noise_sd *
                   hashed_normal(mix_seed(settings.optimizer.seed, 0x9a4dULL, counter));
    }
    ++counter;
    rows.push_back({v, !std::isfinite(v), utc_timestamp()});
    std::cerr << "eval " << rows.size() << "/" << settings.optimizer.n_iter << " "
              << config::format_tuple(knots) << " -> " << num(v) << "\n";
    return v;
  };
  const gp::OptimizeResult result = gp::bayesopt_loop(gp::Objective(evaluate), settings.optimizer);

  const std::size_t dims = settings.optimizer.dimension();
  std::ostringstream csv;
  csv << "eval";
  for (std::size_t i = 0; i < dims; ++i) csv << ",knot_" << i;
  csv << ",value,games,failed,timestamp\n";
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    const auto& h = result.history[e];
    csv << e;
    for (double k : h.point) csv << ',' << num(k);
    csv << ',' << (rows[e].failed ? std::string("nan") : num(rows[e].value)) << ','
        << (winrate ? base.games + base.games % 2 : 0) << ',' << (h.failed ? 1 : 0) << ','
        << rows[e].timestamp << '\n';
  }

  json j;
  j["objective"] = settings.objective;
  j["kind"] = to_string(settings.kind);
  j["evaluations"] = result.history.size();
  j["best_point"] = result.best_point;
  j["best_value"] = result.best_value;
  j["best_tuple"] = config::format_tuple(result.best_point);
  if (winrate && settings.confirm_games > 0) {
    MatchConfig confirm = base;
    confirm.games = settings.confirm_games;
    confirm.seed = mix_seed(base.seed, 0xc0f1ULL);
    const MatchResult m =
        run_match(profile_match(result.best_point, settings.kind, confirm, settings.horizon),
                  opts.workers);
    j["confirmation"] = match_json(m);
    j["confirmation"]["seed"] = confirm.seed;
  }

  std::ostringstream resolved;
  if (winrate) {
    config::write_game(resolved, rg->game);
    resolved << "\n";
    config::write_search(resolved, "engine", base.engine_a);
    resolved << "\n";
  }
  config::write_match(resolved, ms);
  resolved << "\n";
  config::write_optimize(resolved, settings);

  const fs::path out = prepare_out(opts);
  atomic_write(out / "history.csv", csv.str());
  atomic_write(out / "best.json", j.dump(2) + "\n");
  atomic_write(out / "manifest.ini", manifest_text("optimize", opts, resolved.str()));
  std::cout << "best " << to_string(settings.kind) << " profile "
            << config::format_tuple(result.best_point) << "  value " << num(result.best_value)
            << "\n";
  if (j.contains("confirmation")) {
    const auto& c = j["confirmation"];
    std::cout << "confirmation win_rate " << num(c["win_rate_a"].get<double>()) << "  ci95 ["
              << num(c["ci95"][0].get<double>()) << ", " << num(c["ci95"][1].get<double>())
              << "]\n";
  }
  return 0;
}

// ------------------------------------------------------------ dump-profile

int cmd_dump_profile(const Options& opts) {
  KeyValueFile file = load_config(opts, {"profile"});
  require_section(file, "profile");
  const Section sp = file.section("profile");
  const config::ProfileSettings ps = config::read_profile(sp);
  sp.finish();
  WeightProfile profile = [&] {
    try {
      return build_weight_table(ps.knots, ps.horizon, ps.w0);
    } catch (const std::invalid_argument& e) {
      sp.fail("knots", e.what());
    }
  }();

  std::ostringstream csv;
  csv << "t,p,w\n";
  const auto table = profile.table();
  for (std::size_t t = 0; t < table.size(); ++t) {
    csv << t << ',' << num(profile.exponent(static_cast<double>(t))) << ',' << num(table[t])
        << '\n';
  }
  std::ostringstream resolved;
  config::write_profile(resolved, ps);

  const fs::path out = prepare_out(opts);
  atomic_write(out / "profile.csv", csv.str());
  atomic_write(out / "manifest.ini", manifest_text("dump-profile", opts, resolved.str()));
  std::cout << "w(0) " << num(table.front()) << "  w(" << ps.horizon << ") "
            << num(table.back()) << "\n";
  return 0;
}

void add_common(CLI::App* sub, Options& opts) {
  sub->add_option("--config", opts.config_path, "Key-value config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--seed", opts.seed, "Override the primary seed of the subcommand");
  sub->add_option("--workers", opts.workers, "Worker threads for match play")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo tree search with pluggable backups and weight-profile tuning"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options opts;

  auto* gen = app.add_subcommand("gen-game", "Write a game descriptor from [game]");
  gen->footer(
      "Outputs: game.ini (descriptor with trap_actions), manifest.ini.\n"
      "--seed replaces the tree seed.");
  auto* analyze = app.add_subcommand("analyze", "Search one position with [search]");
  analyze->footer(
      "Outputs: analyze.csv, result.json, manifest.ini.\n"
      "analyze.csv columns: action, visits, q (backed-up value, MAX view),\n"
      "  prior, minimax (exact value of the child when known).\n"
      "--seed replaces the search seed.");
  auto* tournament =
      app.add_subcommand("tournament", "Play [engine_a] against [engine_b] under [match]");
  tournament->footer(
      "Outputs: games.csv, result.json, manifest.ini.\n"
      "games.csv columns: game, position_seed, a_first (1 if A moved first),\n"
      "  outcome (A, B or draw), moves (space-separated actions).\n"
      "--seed replaces the match seed.");
  auto* optimize =
      app.add_subcommand("optimize", "Tune weight-profile knots by Bayesian optimization");
  optimize->footer(
      "Outputs: history.csv, best.json, manifest.ini.\n"
      "history.csv columns: eval, knot_0..knot_{m-1}, value (win-rate against\n"
      "  standard MCTS, or the test-function value), games, failed, timestamp\n"
      "  (UTC, the only column that differs between reruns).\n"
      "--seed replaces the optimizer seed.");
  auto* dump = app.add_subcommand("dump-profile", "Tabulate the weight profile in [profile]");
  dump->footer(
      "Outputs: profile.csv, manifest.ini.\n"
      "profile.csv columns: t (0..horizon), p (interpolated exponent), w (weight).");
  for (auto* sub : {gen, analyze, tournament, optimize, dump}) add_common(sub, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_game(opts);
    if (*analyze) return cmd_analyze(opts);
    if (*tournament) return cmd_tournament(opts);
    if (*optimize) return cmd_optimize(opts);
    if (*dump) return cmd_dump_profile(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
