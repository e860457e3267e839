#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "arrowlab/scenario.hpp"

using namespace arrowlab;
using namespace arrowlab::scenario;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("arrowlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> errors_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.errors();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& a, const std::string& b = "") {
  for (const auto& s : v) {
    if (s.find(a) != std::string::npos && s.find(b) != std::string::npos) return true;
  }
  return false;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return out;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ARROWLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(io::read_file(dir / "summary.json")); }

}  // namespace

TEST(ParseScenario, MinimalMeasureFillsDefaults) {
  const auto s = parse_scenario("[cosmo-measure]\n");
  EXPECT_EQ(s.kind, "cosmo-measure");
  EXPECT_EQ(s.seed, 1u);
  EXPECT_EQ(s.integer("n_samples"), 10000);
  EXPECT_EQ(s.list("epsilons").size(), 7u);
  EXPECT_EQ(s.list("box.phi"), (std::vector<double>{-2.0, 2.0}));
  EXPECT_EQ(s.real("m"), 1.0);
  EXPECT_EQ(s.real("lambda"), 0.0);
}

TEST(ParseScenario, CommentsWhitespaceAndInlineComments) {
  const auto s = parse_scenario("# header\n\n  [ taub-run ]  \n  u0 =  -1.5   # start\nbranch=minus\r\n");
  EXPECT_EQ(s.real("u0"), -1.5);
  EXPECT_EQ(s.str("branch"), "minus");
}

TEST(ParseScenario, MisspelledKeyNamesKeyAndLine) {
  const auto e = errors_of("[cosmo-measure]\nn_samples = 100\nepsilonss = 0.1, 0.01\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_TRUE(any_contains(e, "line 3", "'epsilonss'")) << e[0];
}

TEST(ParseScenario, NegativeSampleCountIsPrecondition) {
  const auto e = errors_of("[cosmo-measure]\nn_samples = -5\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_TRUE(any_contains(e, "line 2", "n_samples")) << e[0];
}

TEST(ParseScenario, ErrorsCarryLocations) {
  EXPECT_TRUE(any_contains(errors_of("[cosmo-measur]\n"), "line 1", "unknown scenario kind"));
  EXPECT_TRUE(any_contains(errors_of("\n[cosmo-symmetry]\na_dot = 0\nphi = 1\n"), "line 2", "'phi_dot'"));
  EXPECT_TRUE(any_contains(errors_of("[taub-run]\nq_span = twenty\n"), "line 2", "expected real"));
  EXPECT_TRUE(any_contains(errors_of("[taub-run]\ntwin = maybe\n"), "line 2", "boolean"));
  EXPECT_TRUE(any_contains(errors_of("[pendulum-scan]\nn_states = 2.5\n"), "line 2", "integer"));
  EXPECT_TRUE(any_contains(errors_of("u0 = 1\n[taub-run]\n"), "line 1", "before"));
  EXPECT_TRUE(any_contains(errors_of("[taub-run]\nu0 = 1\nu0 = 2\n"), "line 3", "duplicate"));
  EXPECT_TRUE(any_contains(errors_of("[taub-run]\n[taub-run]\n"), "line 2", "one [section]"));
  EXPECT_TRUE(any_contains(errors_of(""), "line 1", "missing [section]"));
  EXPECT_TRUE(any_contains(errors_of("[taub-run]\nbranch = sideways\n"), "line 2", "plus minus"));
  EXPECT_TRUE(any_contains(errors_of("[cosmo-measure]\nbox.phi = 2, -2\n"), "line 2", "lo < hi"));
  EXPECT_TRUE(any_contains(errors_of("[reversal-check]\nsystem = cosmo\nstate = 1, 2\n"), "line 3", "3 components"));
  EXPECT_TRUE(any_contains(errors_of("[orientability]\ntopology = ring 2\n"), "line 2", "topology"));
  EXPECT_TRUE(any_contains(errors_of("[orientability]\ntopology = ring 4\nroot = 9\n"), "line 3", "root"));
  EXPECT_TRUE(any_contains(errors_of("[geometry-scan]\nmetric = flat-flrw\nt_lo = 0\n"), "line 3", "t > 0"));
  EXPECT_TRUE(any_contains(errors_of("[cosmo-symmetry]\na_dot = 0\nphi = 0\nphi_dot = 0\n"), "line 2", "a_dot"));
}

TEST(ParseScenario, AllErrorsReportedTogether) {
  const auto e = errors_of("[pendulum-scan]\nK = -1\nbogus = 3\ntol = 0.5\n");
  EXPECT_EQ(e.size(), 3u);
}

TEST(PrintScenario, RoundTripOnShippedAndAwkwardValues) {
  std::size_t n = 0;
  for (const auto& f : fs::directory_iterator(ARROWLAB_SCENARIO_DIR)) {
    const auto s = parse_scenario(io::read_file(f.path()));
    EXPECT_EQ(parse_scenario(print_scenario(s)), s) << f.path();
    ++n;
  }
  EXPECT_GE(n, 15u);
  auto s = parse_scenario("[cosmo-measure]\nseed = 18446744073709551\n");
  s.params["m"] = 0.1 + 0.2;
  s.params["lambda"] = -1e-300;
  s.params["epsilons"] = std::vector<double>{1.0 / 3, 2.2250738585072014e-308, 1e300};
  EXPECT_EQ(parse_scenario(print_scenario(s)), s);
  const auto t = parse_scenario("[orientability]\ntopology = cell 0; cell 1; cell 2; edge 0 1 flip=1; edge 1 2 flip=0\n");
  EXPECT_EQ(parse_scenario(print_scenario(t)), t);
}

TEST(RunScenario, MeasureIsByteIdenticalAcrossRunsAndThreads) {
  auto s = parse_scenario("[cosmo-measure]\nseed = 7\nn_samples = 100\n");
  const auto a = scratch("measure_a"), b = scratch("measure_b"), c = scratch("measure_c");
  ASSERT_EQ(run_scenario(s, a).exit_code, kOk);
  ASSERT_EQ(run_scenario(s, b).exit_code, kOk);
  s.params["threads"] = 3LL;
  ASSERT_EQ(run_scenario(s, c).exit_code, kOk);
  const auto ta = tree(a), tb = tree(b), tc = tree(c);
  EXPECT_EQ(ta.size(), 3u);
  EXPECT_EQ(ta, tb);
  // Only the echoed thread count may differ.
  EXPECT_EQ(ta.at("samples.csv"), tc.at("samples.csv"));
  EXPECT_EQ(ta.at("fractions.csv"), tc.at("fractions.csv"));
  s.seed = 8;
  const auto d = scratch("measure_d");
  run_scenario(s, d);
  EXPECT_NE(ta.at("samples.csv"), tree(d).at("samples.csv"));
}

TEST(RunScenario, SummaryEchoesDefaults) {
  const auto s = parse_scenario("[cosmo-measure]\nn_samples = 100\n");
  const auto dir = scratch("echo");
  const auto rep = run_scenario(s, dir);
  const auto j = summary(dir);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["scenario"]["seed"], 1);
  EXPECT_EQ(j["scenario"]["epsilons"].size(), 7u);
  EXPECT_EQ(j["scenario"]["fit_eps_max"], 3e-3);
  EXPECT_FALSE(j["scenario"].contains("out"));
  EXPECT_TRUE(j["tolerances"].contains("step_tolerance"));
  EXPECT_EQ(j["arrowlab_version"], std::string(kVersion));
  EXPECT_EQ(j["files"], (nlohmann::json{"samples.csv", "fractions.csv"}));
  EXPECT_EQ(rep.files.back(), "summary.json");
  for (const auto& f : fs::directory_iterator(dir)) EXPECT_NE(f.path().extension(), ".tmp");
}

TEST(RunScenario, MobiusRingVerdict) {
  const auto dir = scratch("mobius");
  const auto rep = run_scenario(parse_scenario("[orientability]\ntopology = ring 5 flips=2\n"), dir);
  ASSERT_EQ(rep.exit_code, kOk);
  const auto m = summary(dir)["metrics"];
  EXPECT_EQ(m["verdict"], "non-orientable");
  EXPECT_EQ(m["witness_cycle"].size(), 5u);
  EXPECT_EQ(m["witness_flip_parity"], 1);
  const auto r = nlohmann::json::parse(io::read_file(dir / "result.json"));
  EXPECT_FALSE(r["consistent"].get<bool>());
}

TEST(RunScenario, DisconnectedTopologyIsRuntimeFailure) {
  const auto dir = scratch("disconnected");
  const auto rep = run_scenario(parse_scenario("[orientability]\ntopology = cell 0; cell 1; cell 2; edge 0 1 flip=0\n"), dir);
  EXPECT_EQ(rep.exit_code, kRuntime);
  const auto j = summary(dir);
  EXPECT_EQ(j["status"], "runtime_error");
  EXPECT_EQ(j["code"], kRuntime);
  EXPECT_NE(j["error"].get<std::string>().find("connected"), std::string::npos);
}

TEST(RunScenario, MinkowskiScan) {
  const auto dir = scratch("minkowski");
  const auto s = parse_scenario("[geometry-scan]\nmetric = minkowski\nt_lo = -1\nny = 2\ny_hi = 1\n");
  ASSERT_EQ(run_scenario(s, dir).exit_code, kOk);
  const auto m = summary(dir)["metrics"];
  EXPECT_EQ(m["points"], 18);
  EXPECT_EQ(m["dec_pass_rate"], 1.0);
  EXPECT_EQ(m["max_abs_tau_row"], 0.0);
}

TEST(RunScenario, UnwritableOutputIsIoFailure) {
  const auto base = scratch("io");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  const auto rep = run_scenario(parse_scenario("[taub-run]\nq_span = 1\n"), base / "file" / "sub");
  EXPECT_EQ(rep.exit_code, kIo);
  EXPECT_EQ(rep.summary["status"], "io_error");
}

TEST(Plotdata, SymmetricCosmoRunIsMirrored) {
  const auto dir = scratch("mirror");
  ASSERT_EQ(run_scenario(parse_scenario("[cosmo-symmetry]\na_dot = 0\nphi = 1\nphi_dot = 0\n"), dir).exit_code, kOk);
  const auto files = export_plotdata(dir);
  EXPECT_EQ(files, (std::vector<std::string>{"a_of_t.csv", "phase_portrait.csv", "a_mirrored.csv"}));
  std::ifstream in(dir / "plot" / "a_mirrored.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "s,a_before,a_after,difference");
  int rows = 0;
  double worst = 0, reach = 0;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    worst = std::max(worst, std::abs(std::stod(line.substr(last + 1))));
    reach = std::stod(line.substr(0, line.find(',')));
    ++rows;
  }
  EXPECT_EQ(rows, 101);
  EXPECT_NEAR(reach, 5.0, 1e-12);
  EXPECT_LT(worst, 1e-6);
}

TEST(Plotdata, MeasureFractionsSortedAscending) {
  const auto dir = scratch("plot_measure");
  run_scenario(parse_scenario("[cosmo-measure]\nn_samples = 100\nepsilons = 0.01, 0.1, 1e-3, 0.03\n"), dir);
  export_plotdata(dir);
  std::ifstream in(dir / "plot" / "fraction_vs_epsilon.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> eps;
  while (std::getline(in, line)) eps.push_back(std::stod(line.substr(0, line.find(','))));
  EXPECT_EQ(eps, (std::vector<double>{1e-3, 0.01, 0.03, 0.1}));
  std::ifstream h(dir / "plot" / "defect_histogram.csv");
  std::size_t total = 0;
  std::getline(h, line);
  while (std::getline(h, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  EXPECT_EQ(total, 100u);
}

TEST(Plotdata, PendulumClassCountsMatchSampleCount) {
  const auto dir = scratch("plot_pendulum");
  run_scenario(parse_scenario("[pendulum-scan]\nn_states = 300\n"), dir);
  export_plotdata(dir);
  std::ifstream in(dir / "plot" / "class_counts.csv");
  std::string line;
  std::getline(in, line);
  std::size_t total = 0;
  while (std::getline(in, line)) total += std::stoul(line.substr(line.find(',') + 1));
  EXPECT_EQ(total, 300u);
  const auto j = summary(dir);
  EXPECT_EQ(j["metrics"]["agreement_rate"], 1.0);
  EXPECT_LT(j["metrics"]["max_energy_drift"].get<double>(), 1e-8);
}

TEST(Plotdata, MissingInputsAreReported) {
  EXPECT_THROW(export_plotdata(scratch("nothing")), PlotdataError);
  const auto dir = scratch("plot_missing");
  run_scenario(parse_scenario("[taub-run]\nq_span = 1\n"), dir);
  fs::remove(dir / "trajectory.csv");
  fs::remove(dir / "twin.csv");
  EXPECT_NO_THROW(export_plotdata(dir));
  const auto geo = scratch("plot_missing_geo");
  run_scenario(parse_scenario("[geometry-scan]\nmetric = minkowski\n"), geo);
  fs::remove(geo / "scan.csv");
  EXPECT_THROW(export_plotdata(geo), PlotdataError);
}

TEST(Cli, ExitCodesAndSeedOverride) {
  const auto base = scratch("cli");
  fs::create_directories(base);
  std::ofstream(base / "bad.ini") << "[cosmo-measure]\nepsilonss = 1\n";
  std::ofstream(base / "ok.ini") << "[cosmo-measure]\nn_samples = 100\nseed = 3\n";
  std::ofstream(base / "split.ini") << "[orientability]\ntopology = cell 0; cell 1\n";
  EXPECT_EQ(cli("validate " + (base / "bad.ini").string()), kValidation);
  EXPECT_EQ(cli("validate " + (base / "ok.ini").string()), kOk);
  EXPECT_EQ(cli("validate " + (base / "absent.ini").string()), kIo);
  EXPECT_EQ(cli("run --quiet --seed 11 --out " + (base / "run").string() + " " + (base / "ok.ini").string()), kOk);
  EXPECT_EQ(summary(base / "run")["scenario"]["seed"], 11);
  EXPECT_EQ(cli("run -q --out " + (base / "split").string() + " " + (base / "split.ini").string()), kRuntime);
  EXPECT_EQ(cli("plotdata " + (base / "run").string()), kOk);
  EXPECT_TRUE(fs::exists(base / "run" / "plot" / "fraction_vs_epsilon.csv"));
  EXPECT_EQ(cli("plotdata " + (base / "split").string()), kRuntime);
  EXPECT_EQ(cli("frobnicate"), kValidation);
}
