#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mctsbp/bayesopt.hpp"
#include "mctsbp/search.hpp"
#include "mctsbp/tournament.hpp"

namespace mctsbp::config {

// Validation failure tied to a source line (0 when not line-specific).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

class KeyValueFile;

// Read access to one [section]. Every key read is marked used; finish()
// rejects whatever was not read, so typos never fall back to defaults.
class Section {
 public:
  Section(const KeyValueFile* file, std::string name) : file_(file), name_(std::move(name)) {}

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;

  // Rejects any key outside `known` before values are interpreted, so a typo
  // is reported as such rather than as a failed default.
  void expect_keys(const std::set<std::string>& known) const;

  // Throws ConfigError naming the line of the offending value.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
  void finish() const;
  const std::string& name() const { return name_; }

 private:
  const KeyValueFile* file_;
  std::string name_;
};

// Flat "key = value" text grouped under [section] headers; '#' starts a
// comment. Duplicate keys and keys outside a section are errors.
class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::string_view text, std::string source = "<config>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  Section section(const std::string& name) const { return Section(this, name); }
  // Rejects sections outside `allowed`.
  void require_sections(const std::set<std::string>& allowed) const;
  const std::string& source() const { return source_; }

  const Entry* find(const std::string& section, const std::string& key) const;
  void mark_used(const std::string& section, const std::string& key) const;
  std::vector<std::pair<std::string, Entry>> unused(const std::string& section) const;
  std::vector<std::pair<std::string, Entry>> entries(const std::string& section) const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, int> section_lines_;
  mutable std::set<std::pair<std::string, std::string>> used_;
};

std::vector<double> parse_list(std::string_view text);
// "(a, b, c)" with one decimal, matching the reported knot tuples.
std::string format_tuple(const std::vector<double>& values);
std::string format_double(double value);

GameDescriptor read_game(const Section& section);
SyntheticTreeSpec read_synthetic_spec(const Section& section);
SearchConfig read_search(const Section& section);

struct MatchSettings {
  int games = 400;
  int sims_per_move = 200;
  std::uint64_t seed = 0;
};
MatchSettings read_match(const Section& section);

struct OptimizeSettings {
  gp::OptimizeConfig optimizer;
  ProfileKind kind = ProfileKind::kSoftmax;
  // "winrate" plays matches; "quadratic" is the known-optimum test function.
  std::string objective = "winrate";
  int horizon = 0;
  std::vector<double> quadratic_optimum;
  double quadratic_noise_sd = 0.02;
  int confirm_games = 0;
};
OptimizeSettings read_optimize(const Section& section, int default_games);

struct ProfileSettings {
  std::vector<double> knots;
  int horizon = 0;
  double w0 = 1.0;
};
ProfileSettings read_profile(const Section& section);

void write_game(std::ostream& os, const GameDescriptor& game);
void write_synthetic_spec(std::ostream& os, const SyntheticTreeSpec& spec);
void write_search(std::ostream& os, const std::string& name, const SearchConfig& config);
void write_match(std::ostream& os, const MatchSettings& match);
void write_optimize(std::ostream& os, const OptimizeSettings& settings);
void write_profile(std::ostream& os, const ProfileSettings& profile);

}  // namespace mctsbp::config
