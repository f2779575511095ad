#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mne/serialization.hpp"

namespace fs = std::filesystem;
using mne::Json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(MNE_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mne_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, BetaCalculator) {
  const Result r = cli("beta --epsilon 0.2 --kl 2 --lip 1 --manifold torus1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 100.48, 0.01);
  EXPECT_EQ(cli("beta --epsilon 5 --kl 2 --lip 1 --manifold torus1").code, 1);
}

TEST(Cli, OracleMatchingPennies) {
  const fs::path dir = scratch("oracle");
  std::ofstream(dir / "matching_pennies.csv") << "1,-1\n-1,1\n";
  const Result r = cli("oracle --matrix " + (dir / "matching_pennies.csv").string());
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j.at("value").get<double>(), 0.0, 1e-12);
  for (const char* side : {"x", "y"})
    for (double w : j.at(side).get<std::vector<double>>()) EXPECT_NEAR(w, 0.5, 1e-12);
  EXPECT_EQ(cli("oracle --matrix " + (dir / "missing.csv").string()).code, 1);
}

TEST(Cli, RunWithZeroIterations) {
  const fs::path dir = scratch("run0");
  const Result r = cli("run --algo md --game matching_pennies --iters 0 --out " + (dir / "r").string());
  ASSERT_EQ(r.code, 0);
  for (const char* f : {"record.csv", "config.json", "final_x.csv", "final_y.csv"})
    EXPECT_TRUE(fs::exists(dir / "r" / f)) << f;
  const std::string rec = slurp(dir / "r" / "record.csv");
  EXPECT_EQ(std::count(rec.begin(), rec.end(), '\n'), 2);  // header plus one checkpoint
  const Json cfg = mne::load_json_file((dir / "r" / "config.json").string());
  EXPECT_EQ(cfg.at("algo"), "md");
  EXPECT_EQ(cfg.at("iters"), 0);
}

TEST(Cli, FlagsOverrideConfigAndSeedDeterminesOutputs) {
  const fs::path dir = scratch("override");
  std::ofstream(dir / "cfg.json") << R"({"algo": "lda", "eta": 0.5, "beta": 10, "n": 8, "iters": 20})";
  const std::string base = "run --config " + (dir / "cfg.json").string() + " --game poly_a --dim 3 --eta 0.01 --seed 4";
  ASSERT_EQ(cli(base + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(cli(base + " --out " + (dir / "b").string()).code, 0);
  const Json cfg = mne::load_json_file((dir / "a" / "config.json").string());
  EXPECT_EQ(cfg.at("eta"), 0.01);
  EXPECT_EQ(cfg.at("beta"), 10.0);
  EXPECT_EQ(cfg.at("n"), 8);
  EXPECT_EQ(slurp(dir / "a" / "final_x.csv"), slurp(dir / "b" / "final_x.csv"));
  EXPECT_EQ(slurp(dir / "a" / "final_y.csv"), slurp(dir / "b" / "final_y.csv"));
}

TEST(Cli, NiMatchesLibrary) {
  const fs::path dir = scratch("ni");
  ASSERT_EQ(cli("run --algo wfr --game bilinear --dim 3 --n 10 --iters 50 --out " + (dir / "r").string()).code, 0);
  const Result r = cli("ni --game bilinear --dim 3 --starts 20 --ascent-iters 100 --seed 1 --x " +
                       (dir / "r" / "final_x.csv").string() + " --y " + (dir / "r" / "final_y.csv").string());
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  const mne::Game g = mne::make_bilinear_game(3);
  std::ifstream fx(dir / "r" / "final_x.csv"), fy(dir / "r" / "final_y.csv");
  const auto ex = mne::read_ensemble_csv(fx, g.space_x());
  const auto ey = mne::read_ensemble_csv(fy, g.space_y());
  EXPECT_EQ(j.at("estimate").get<double>(), mne::ni_estimate(ex, ey, g, {20, 100, 0.5, 1}).estimate);
  EXPECT_NEAR(j.at("exact").get<double>(), mne::ni_exact_bilinear(ex, ey), 1e-15);
}

TEST(Cli, GibbsAndGradcheck) {
  const Result g = cli("gibbs --beta 2 --bins 16 --tol 1e-10");
  ASSERT_EQ(g.code, 0);
  EXPECT_EQ(g.out.substr(0, g.out.find('\n')), "bin_center,rho_x,rho_y");
  EXPECT_EQ(std::count(g.out.begin(), g.out.end(), '\n'), 17);
  const Result c = cli("gradcheck --game poly_a --dim 5 --points 20");
  ASSERT_EQ(c.code, 0);
  EXPECT_TRUE(Json::parse(c.out).at("pass").get<bool>());
  EXPECT_EQ(cli("gradcheck --game rps").code, 1);
}

TEST(Cli, SweepWritesOutputs) {
  const fs::path dir = scratch("sweep");
  std::ofstream(dir / "plan.json") << R"({"name": "t", "game": {"kind": "bilinear"}, "dims": [3], "algos": ["wfr"],
    "n": [10], "iters": 20, "repeats": 2, "checkpoint_estimator": {"starts": 10, "ascent_iters": 20},
    "final_estimator": {"starts": 10, "ascent_iters": 20}})";
  const Result r = cli("sweep --plan " + (dir / "plan.json").string() + " --out " + (dir / "out").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "sweep_long.csv"));
  EXPECT_EQ(r.out, slurp(dir / "out" / "sweep_agg.csv"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("run --algo adam").code, 1);
  EXPECT_EQ(cli("run --bogus-flag 3").code, 1);
  EXPECT_EQ(cli("beta --epsilon 0.2").code, 1);
  EXPECT_EQ(cli("run --game nope --iters 1").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, NumericalAbortExitCode) {
  const fs::path dir = scratch("nan");
  std::ofstream(dir / "nan.json") << R"({"kind": "matrix", "rows": 1, "cols": 2, "data": [1e308, -1e308]})";
  // Weights overflow: eta_w * 1e308 * 1e10 is infinite.
  const Result r = cli("run --algo md --game " + (dir / "nan.json").string() + " --eta-w 1e10 --iters 3 --out " +
                       (dir / "r").string());
  EXPECT_EQ(r.code, 2);
}
