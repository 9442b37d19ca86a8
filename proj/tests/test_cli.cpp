#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fblab/experiment.hpp"

using namespace fblab;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FBLAB_FIXTURES_DIR;

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fblab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

const CheckResult* find_check(const RunManifest& m, const std::string& name) {
  for (const auto& c : m.checks)
    if (c.name == name) return &c;
  return nullptr;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(FBLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(RunExperiment, MinimalConfigPassesWithZeroSolution) {
  const auto dir = scratch_dir("minimal");
  const auto m = run_experiment((kFixtures / "minimal_zero.json").string(), {dir.string(), std::nullopt, true});
  EXPECT_TRUE(m.passed());
  ASSERT_NE(find_check(m, "uniqueness"), nullptr);
  for (const auto& f : m.files) EXPECT_TRUE(fs::exists(f)) << f;
  std::ifstream in(dir / "res_33" / "u.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,u");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.substr(line.find(',') + 1), "0");
    ++rows;
  }
  EXPECT_EQ(rows, 33);
}

TEST(RunExperiment, ObstacleFixturePassesItsAnalyses) {
  const auto dir = scratch_dir("fixture_a");
  const auto m = run_experiment((kFixtures / "fixture_a_obstacle_1d.json").string(), {dir.string(), std::nullopt, true});
  for (const char* name : {"growth", "nondegeneracy", "weiss"}) {
    const auto* c = find_check(m, name);
    ASSERT_NE(c, nullptr) << name;
    EXPECT_TRUE(c->passed) << name << ": " << c->detail;
    EXPECT_GE(c->margin, 0.0) << name;
  }
  EXPECT_TRUE(m.passed());
}

TEST(RunExperiment, CsvHeadersFollowTheSchema) {
  const auto dir = scratch_dir("headers");
  run_experiment((kFixtures / "fixture_a_obstacle_1d.json").string(), {dir.string(), std::nullopt, true});
  auto header = [&](const char* file) {
    std::ifstream in(dir / "res_513" / file);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(header("solve.csv"), "iteration,energy,kkt_residual");
  EXPECT_EQ(header("growth.csv"), "r,sup_u,log_r,log_sup,predicted_exponent,fitted_slope");
  EXPECT_EQ(header("weiss.csv"), "r,W_rescaled,W_raw,dirichlet,source,boundary,delta_W");
  EXPECT_EQ(header("nondegeneracy.csv"), "r,sup_u,log_r,log_sup,predicted_exponent,fitted_slope,bound,passed");
}

TEST(RunExperiment, BlowupCsvHeader) {
  const auto dir = scratch_dir("blowup");
  auto text = slurp(kFixtures / "fixture_a_obstacle_1d.json");
  text.replace(text.find("\"analyses\": ["), 13, "\"analyses\": [\"blowup\", ");
  const auto cfg = write_config(dir, text);
  run_experiment(cfg.string(), {(dir / "out").string(), std::nullopt, true});
  std::ifstream in(dir / "out" / "res_513" / "blowup.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r_n,c0_dist_to_prev,c1_dist_to_prev,residual_deg2,residual_deg_2mNq");
}

TEST(RunExperiment, IdenticalSeedsGiveByteIdenticalCsv) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  const auto cfg = (kFixtures / "fixture_b_disc_sign_changing.json").string();
  run_experiment(cfg, {a.string(), 9u, true});
  run_experiment(cfg, {b.string(), 9u, true});
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
    ++compared;
  }
  EXPECT_EQ(compared, 5);
}

TEST(RunExperiment, ManifestRecordsHashAndChecks) {
  const auto dir = scratch_dir("manifest");
  const auto path = kFixtures / "minimal_zero.json";
  const auto m = run_experiment(path.string(), {dir.string(), std::nullopt, true});
  const auto j = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j.at("config_hash").get<std::string>(), fnv1a_hex(slurp(path)));
  EXPECT_EQ(j.at("passed").get<bool>(), m.passed());
  EXPECT_EQ(j.at("checks").size(), m.checks.size());
  for (const auto& c : j.at("checks")) EXPECT_TRUE(c.contains("margin"));
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(ParseConfig, RejectsHalfCriticalExponentAsInconclusive) {
  const auto dir = scratch_dir("regime");
  const auto cfg = write_config(dir, R"({"domain": {"type": "rectangle", "min": [0, 0], "max": [1, 1]},
    "resolutions": [9], "source": {"kind": "constant", "value": 1, "q": 1}})");
  try {
    load_config(cfg.string());
    FAIL() << "q = N/2 accepted";
  } catch (const RegimeError& e) {
    EXPECT_NE(std::string(e.what()).find("inconclusive"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("source.q"), std::string::npos);
  }
}

TEST(ParseConfig, NamesTheOffendingField) {
  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      parse_config(json::parse(text));
      FAIL() << "accepted: " << text;
    } catch (const ConfigurationError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(field, 0), 0u) << e.what();
    }
  };
  const std::string dom = R"("domain": {"type": "interval", "min": 0, "max": 1})";
  expect_field("{" + dom + R"(, "resolutions": [2], "source": {"kind": "constant", "value": 0}})", "resolutions");
  expect_field("{" + dom + R"(, "resolutions": [9], "source": {"kind": "bogus"}})", "source.kind");
  expect_field("{" + dom + R"(, "resolutions": [9], "source": {"kind": "constant", "value": 0},
               "analyses": ["nondegeneracy"]})", "source.c0");
  expect_field("{" + dom + R"(, "resolutions": [33], "source": {"kind": "constant", "value": 0},
               "analyses": ["oracle"]})", "analyses");
  expect_field(R"({"resolutions": [9], "source": {"kind": "constant", "value": 0}})", "domain");
  expect_field("{" + dom + R"(, "resolutions": [9], "source": {"kind": "constant", "value": 0},
               "solver": {"omega": 2.5}})", "solver");
}

TEST(ParseConfig, AcceptsInfiniteExponent) {
  const auto c = parse_config(json::parse(R"({"domain": {"type": "interval", "min": -1, "max": 1},
    "resolutions": [17], "source": {"kind": "constant", "value": -2, "q": "inf"}})"));
  EXPECT_TRUE(std::isinf(c.source.q()));
  EXPECT_EQ(predicted_growth_exponent(c.source), 2.0);
  EXPECT_EQ(predicted_holder_exponent(c.source.q(), c.dim()).tag(), "C^{1,1}");
}

TEST(ListFixtures, OneRowPerFileNamingAResult) {
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(kFixtures))
    if (e.path().extension() == ".json") ++files;
  const auto rows = list_fixtures(kFixtures);
  EXPECT_EQ(rows.size(), files);
  bool a = false, b = false, c = false;
  for (const auto& r : rows) {
    EXPECT_TRUE(r.exercises.find("lemma") != std::string::npos || r.exercises.find("theorem") != std::string::npos)
        << r.name;
    EXPECT_FALSE(r.expected.empty()) << r.name;
    a = a || r.name.find("fixture_a") == 0;
    b = b || r.name.find("fixture_b") == 0;
    c = c || r.name.find("fixture_c") == 0;
  }
  EXPECT_TRUE(a && b && c);
}

TEST(Cli, ExitStatus) {
  const auto dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("run " + (kFixtures / "minimal_zero.json").string() + " --quiet --output-dir " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const auto bad = write_config(dir, R"({"domain": {"type": "interval", "min": 0, "max": 1}, "resolutions": [9],
    "source": {"kind": "constant", "value": 1, "q": 0.5}})");
  EXPECT_EQ(run_cli("run " + bad.string() + " --quiet"), 2);
  // A solver capped at one sweep fails its convergence check.
  const auto capped = write_config(dir, R"({"domain": {"type": "interval", "min": -1, "max": 1}, "resolutions": [65],
    "source": {"kind": "constant", "value": -2}, "boundary": {"value": 0.25}, "solver": {"max_iters": 1},
    "analyses": ["uniqueness"], "output_dir": ")" + (dir / "capped").string() + "\"}");
  EXPECT_EQ(run_cli("run " + capped.string() + " --quiet"), 1);
  EXPECT_EQ(run_cli("list-fixtures --fixtures-dir " + kFixtures.string()), 0);
  EXPECT_NE(run_cli(""), 0);
}

TEST(Cli, OutputDirectoryPrecedence) {
  const auto dir = scratch_dir("precedence");
  const auto cfg = (kFixtures / "minimal_zero.json").string();
  const auto env = dir / "from_env", flag = dir / "from_flag";
  ::setenv("FBLAB_OUTPUT_DIR", env.c_str(), 1);
  run_experiment(cfg, {std::nullopt, std::nullopt, true});
  EXPECT_TRUE(fs::exists(env / "manifest.json"));
  run_experiment(cfg, {flag.string(), std::nullopt, true});
  EXPECT_TRUE(fs::exists(flag / "manifest.json"));
  ::unsetenv("FBLAB_OUTPUT_DIR");
}
