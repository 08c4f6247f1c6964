#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(MCTSBP_TEST_WORKDIR) / "cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

// Runs the CLI; stdout and stderr land in <out>.log. Returns the exit code.
int run(const std::string& args, const fs::path& out) {
  fs::remove_all(out);
  fs::create_directories(out.parent_path());
  const std::string cmd = std::string("\"") + MCTSBP_EXE + "\" " + args + " --out \"" +
                          out.string() + "\" > \"" + out.string() + ".log\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Drops the last comma-separated field of every line.
std::string without_last_column(const std::string& text) {
  std::string out;
  for (const auto& line : lines(text)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

nlohmann::json result_without_timestamp(const fs::path& p) {
  auto j = nlohmann::json::parse(slurp(p));
  j.erase("timestamp");
  return j;
}

const char* kTrapGame = R"([game]
kind = synthetic
branching = 4
depth = 6
leaf_win_prob = 0.75
trap_level = 3
trap_prior = 5
seed = 21
)";

std::string tournament_config(const std::string& game_section) {
  return game_section + R"(
[engine_a]
backup = softmax
knots = (-10, -10, -4, -4, -4, -10)

[engine_b]
backup = standard
seed = 5

[match]
games = 12
sims_per_move = 60
seed = 2
)";
}

}  // namespace

TEST_CASE("dump-profile tabulates an increasing weight function") {
  const auto cfg = write_config("profile.ini", R"([profile]
knots = (-10, -10, -4, -4, -4, -10)
horizon = 5000
w0 = 0
)");
  const fs::path out = kWork / "profile";
  REQUIRE(run("dump-profile --config " + cfg.string(), out) == 0);
  const auto rows = lines(slurp(out / "profile.csv"));
  REQUIRE(rows.size() == 5002);
  CHECK(rows[0] == "t,p,w");
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double w = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
    CHECK(w > prev);
    prev = w;
  }
  CHECK(fs::exists(out / "manifest.ini"));
}

TEST_CASE("tournament output is reproducible at any worker count") {
  const auto cfg = write_config("tournament.ini", tournament_config(kTrapGame));
  const fs::path one = kWork / "t1";
  const fs::path three = kWork / "t3";
  REQUIRE(run("tournament --config " + cfg.string() + " --workers 1", one) == 0);
  REQUIRE(run("tournament --config " + cfg.string() + " --workers 3", three) == 0);
  const std::string games = slurp(one / "games.csv");
  CHECK(lines(games).size() == 13);
  CHECK(games == slurp(three / "games.csv"));
  CHECK(result_without_timestamp(one / "result.json") ==
        result_without_timestamp(three / "result.json"));
  const auto j = nlohmann::json::parse(slurp(one / "result.json"));
  CHECK(j["games"] == 12);
  CHECK(j["wins_a"].get<int>() + j["wins_b"].get<int>() + j["draws"].get<int>() == 12);

  // The manifest is itself a valid config that reproduces the run.
  const fs::path again = kWork / "t_manifest";
  REQUIRE(run("tournament --config " + (one / "manifest.ini").string(), again) == 0);
  CHECK(slurp(again / "games.csv") == games);

  // A seed override changes the games.
  const fs::path reseeded = kWork / "t_seed";
  REQUIRE(run("tournament --config " + cfg.string() + " --seed 99", reseeded) == 0);
  CHECK(slurp(reseeded / "games.csv") != games);
}

TEST_CASE("gen-game descriptors feed later runs") {
  const auto cfg = write_config("gen.ini", kTrapGame);
  const fs::path a = kWork / "g1";
  const fs::path b = kWork / "g2";
  REQUIRE(run("gen-game --config " + cfg.string(), a) == 0);
  REQUIRE(run("gen-game --config " + cfg.string(), b) == 0);
  const std::string desc = slurp(a / "game.ini");
  CHECK(desc == slurp(b / "game.ini"));
  CHECK(desc.find("trap_actions") != std::string::npos);

  const auto via_file = write_config(
      "via_file.ini", tournament_config("[game]\nfile = " + (a / "game.ini").string() + "\n"));
  const auto inline_cfg = write_config("inline.ini", tournament_config(kTrapGame));
  const fs::path x = kWork / "tf";
  const fs::path y = kWork / "ti";
  REQUIRE(run("tournament --config " + via_file.string(), x) == 0);
  REQUIRE(run("tournament --config " + inline_cfg.string(), y) == 0);
  CHECK(slurp(x / "games.csv") == slurp(y / "games.csv"));
}

TEST_CASE("analyze is reproducible") {
  const auto cfg = write_config("analyze.ini", R"([game]
kind = tictactoe
board = X../.O./...

[search]
simulations = 3000
backup = erwa
alpha = 0.05
seed = 4
)");
  const fs::path a = kWork / "a1";
  const fs::path b = kWork / "a2";
  REQUIRE(run("analyze --config " + cfg.string(), a) == 0);
  REQUIRE(run("analyze --config " + cfg.string(), b) == 0);
  const std::string csv = slurp(a / "analyze.csv");
  CHECK(lines(csv).size() == 8);
  CHECK(csv == slurp(b / "analyze.csv"));
}

TEST_CASE("optimize writes one history row per evaluation") {
  const auto cfg = write_config("optimize.ini", R"([optimize]
kind = softmax
objective = quadratic
knots = 3
n_init = 2
n_iter = 4
candidates = 256
seed = 8

[match]
games = 100
)");
  const fs::path a = kWork / "o1";
  const fs::path b = kWork / "o2";
  REQUIRE(run("optimize --config " + cfg.string(), a) == 0);
  REQUIRE(run("optimize --config " + cfg.string() + " --workers 2", b) == 0);
  const std::string history = slurp(a / "history.csv");
  const auto rows = lines(history);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "eval,knot_0,knot_1,knot_2,value,games,failed,timestamp");
  CHECK(without_last_column(history) == without_last_column(slurp(b / "history.csv")));
  CHECK(slurp(a.string() + ".log").find("(") != std::string::npos);
  CHECK(fs::exists(a / "best.json"));
}

TEST_CASE("config errors exit with status 2 and name the line") {
  const auto cfg = write_config("typo.ini", R"([profile]
knots = (-1, -2)
horizn = 10
)");
  const fs::path out = kWork / "typo";
  CHECK(run("dump-profile --config " + cfg.string(), out) == 2);
  const std::string log = slurp(out.string() + ".log");
  CHECK(log.find("typo.ini:3:") != std::string::npos);

  const auto bad = write_config("badvalue.ini", R"([profile]
knots = (-1, 800)
horizon = 10
)");
  CHECK(run("dump-profile --config " + bad.string(), kWork / "badvalue") == 2);
  CHECK(run("dump-profile --config " + (kWork / "missing.ini").string(), kWork / "missing") == 2);
  CHECK(run("no-such-command", kWork / "nosuch") != 0);
}
