// Drives the bvnet executable end to end through temporary directories.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bvnet/bvnet.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace bvnet {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bvnet_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& body) {
    std::ofstream(dir_ / name) << body;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) { return io::read_file(p); }

  Result run(const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string(BVNET_CLI_PATH) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
  }

  fs::path benchmark_params() {
    std::ostringstream os;
    io::write_params(os, friedkin_benchmark());
    return write("bench.txt", os.str());
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateWritesDeterministicCsv) {
  write("sim.cfg",
        "n = 2\nA = 0.8 -0.3 0.4 0.5\nc = 0.1 -0.2\nT = 100\nseed = 7\n");
  const auto cfg = (dir_ / "sim.cfg").string();
  ASSERT_EQ(run("simulate --config " + cfg + " --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("simulate --config " + cfg + " --out " + (dir_ / "b").string()).code, 0);
  const auto a = slurp(dir_ / "a" / "trajectory.csv");
  EXPECT_EQ(a, slurp(dir_ / "b" / "trajectory.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 101);  // header + 100 rows

  const auto traj = simulate_trajectory(testing::hand_instance(),
                                        StateVec::zeros(2), 100, 7);
  std::ostringstream expected;
  io::write_trajectory_csv(expected, traj);
  EXPECT_EQ(a, expected.str());
}

TEST_F(Cli, SimulateBenchmarkVisitsEveryState) {
  benchmark_params();
  write("sim.cfg", "params = bench.txt\nT = 100000\nseed = 1\n");
  const auto r = run("simulate --config " + (dir_ / "sim.cfg").string() +
                     " --out " + (dir_ / "out").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("states_visited=16/16"), std::string::npos) << r.out;
}

TEST_F(Cli, MissingParamsFileFailsWithoutOutput) {
  write("sim.cfg", "params = nowhere.txt\nT = 10\n");
  const auto out = dir_ / "out";
  const auto r = run("simulate --config " + (dir_ / "sim.cfg").string() +
                     " --out " + out.string());
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, UnknownKeyIsUsageErrorWithLine) {
  write("sim.cfg", "n = 2\nA = 1 0 0 1\nc = 0 0\nstpes = 10\n");
  const auto r = run("simulate --config " + (dir_ / "sim.cfg").string() +
                     " --out " + (dir_ / "out").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sim.cfg:4"), std::string::npos) << r.err;
  EXPECT_EQ(run("simulate").code, 1);
  EXPECT_EQ(run("bogus --config x").code, 1);
}

TEST_F(Cli, EstimateSingleTrialMseIsSquaredError) {
  benchmark_params();
  write("est.cfg",
        "params = bench.txt\ntrials = 1\nT = 2000\nsnapshot_every = 500\nseed = 5\n");
  const auto out = dir_ / "out";
  const auto r = run("estimate --config " + (dir_ / "est.cfg").string() +
                     " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto run_csv = slurp(out / "run_0.csv");
  const auto mse_csv = slurp(out / "mse.csv");
  std::istringstream rs(run_csv), ms(mse_csv);
  std::string rline, mline;
  std::getline(rs, rline);
  std::getline(ms, mline);
  EXPECT_EQ(mline, "t,mse,n_trials");
  int rows = 0;
  while (std::getline(rs, rline) && std::getline(ms, mline)) {
    const double err = std::stod(rline.substr(rline.rfind(',') + 1));
    const auto c1 = mline.find(',');
    const double mse = std::stod(mline.substr(c1 + 1, mline.rfind(',') - c1 - 1));
    EXPECT_NEAR(mse, err * err, 1e-14 * (1 + mse));
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(Cli, EstimateIsByteIdenticalAcrossRunsAndThreads) {
  benchmark_params();
  write("est.cfg",
        "params = bench.txt\ntrials = 5\nT = 3000\nsnapshot_every = 1000\n"
        "seed = 11\nthreads = 1\n");
  const auto cfg = (dir_ / "est.cfg").string();
  ASSERT_EQ(run("estimate --config " + cfg + " --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("estimate --config " + cfg + " --out " + (dir_ / "b").string()).code, 0);
  ASSERT_EQ(run("estimate --config " + cfg + " --threads 4 --out " +
                (dir_ / "c").string()).code, 0);
  for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / name)) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "c" / name)) << name;
  }
  EXPECT_TRUE(fs::exists(dir_ / "a" / "run_4.csv"));
}

TEST_F(Cli, AnalyzeBenchmarkPasses) {
  benchmark_params();
  write("an.cfg", "params = bench.txt\n");
  const auto out = dir_ / "out";
  const auto r = run("analyze --config " + (dir_ / "an.cfg").string() +
                     " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  const auto report = slurp(out / "report.txt");
  EXPECT_EQ(report.rfind("analysis PASS n=4", 0), 0u);
  for (const char* f : {"kernel.csv", "stationary.csv", "lemma1.txt",
                        "extended_stationary.csv", "objective_sweep.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST_F(Cli, AnalyzeHandInstanceKernelMatchesOracle) {
  write("an.cfg", "n = 2\nA = 0.8 -0.3 0.4 0.5\nc = 0.1 -0.2\n");
  const auto out = dir_ / "out";
  ASSERT_EQ(run("analyze --config " + (dir_ / "an.cfg").string() + " --out " +
                out.string()).code, 0);
  const auto k = io::read_matrix_csv(slurp(out / "kernel.csv"), "kernel");
  const auto p = testing::hand_instance();
  for (std::uint32_t u = 0; u < 4; ++u)
    for (std::uint32_t s = 0; s < 4; ++s)
      EXPECT_NEAR(k(u, s), testing::oracle_kernel(p, u, s), 1e-15);
}

TEST_F(Cli, AnalyzeAboveCapIsCapacityError) {
  std::ostringstream os;
  os << "n = 12\nA =";
  for (int i = 0; i < 144; ++i) os << (i % 13 == 0 ? " 1" : " 0");
  os << "\nc =";
  for (int i = 0; i < 12; ++i) os << " 0";
  os << '\n';
  write("an.cfg", os.str());
  const auto out = dir_ / "out";
  const auto r = run("analyze --config " + (dir_ / "an.cfg").string() +
                     " --out " + out.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cap 10"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, AnalyzeThenRecoverRoundTrips) {
  benchmark_params();
  write("an.cfg", "params = bench.txt\n");
  ASSERT_EQ(run("analyze --config " + (dir_ / "an.cfg").string() + " --out " +
                (dir_ / "an").string()).code, 0);
  write("rec.cfg", "kernel = an/kernel.csv\nn = 4\n");
  const auto r = run("recover --config " + (dir_ / "rec.cfg").string() +
                     " --out " + (dir_ / "rec").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto q = io::load_params(dir_ / "rec" / "params.txt");
  const auto p = friedkin_benchmark();
  EXPECT_LT((q.weights() - p.weights()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((q.thresholds() - p.thresholds()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST_F(Cli, RecoverCorruptedCsvNamesRow) {
  write("k.csv", "0.25,0.25,0.25,0.25\n0.25,0.25,x,0.25\n");
  write("rec.cfg", "kernel = k.csv\nn = 2\n");
  const auto r = run("recover --config " + (dir_ / "rec.cfg").string() +
                     " --out " + (dir_ / "rec").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("row 2"), std::string::npos) << r.err;
}

TEST_F(Cli, RecoverSwappedRowsIsModelMismatch) {
  auto m = build_transition_matrix(friedkin_benchmark());
  m.p.row(0).swap(m.p.row(3));
  std::ostringstream os;
  io::write_matrix_csv(os, m.p);
  write("k.csv", os.str());
  write("rec.cfg", "kernel = k.csv\nn = 4\n");
  const auto r = run("recover --config " + (dir_ / "rec.cfg").string() +
                     " --out " + (dir_ / "rec").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not produced"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "rec"));
}

}  // namespace
}  // namespace bvnet
