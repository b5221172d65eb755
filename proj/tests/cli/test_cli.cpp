#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "fmoyal/io.hpp"

namespace fs = std::filesystem;
using fmoyal::io::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(FMOYAL_TEST_TMP) / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  Result run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" FMOYAL_CLI_PATH "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), read("stdout.txt"), read("stderr.txt")};
  }

  std::string read(const std::string& name) const {
    return fmoyal::io::read_text_file(dir_ / name);
  }
  json read_json(const std::string& name) const { return json::parse(read(name)); }
  void write(const std::string& name, const std::string& text) const {
    fmoyal::io::write_text_file(dir_ / name, text);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(run("--help").code, 0);
  const auto v = run("--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(FMOYAL_VERSION), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("kernel --bogus 1").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("kernel --q notanumber").code, 1);
}

TEST_F(Cli, AnalyticKernelAtZeroTriple) {
  const auto r = run("kernel --analytic --out k.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const json k = read_json("k.json");
  EXPECT_NEAR(k.at("re").get<double>(), 0.10132118364233777, 1e-15);
  EXPECT_EQ(k.at("im").get<double>(), 0.0);
  const json prov = read_json("k.provenance.json");
  EXPECT_EQ(prov.at("command"), "kernel");
  EXPECT_EQ(prov.at("exit_code"), 0);
  EXPECT_EQ(prov.at("outputs").size(), 1u);
}

TEST_F(Cli, NumericKernelWithDriftReport) {
  const auto r = run("kernel --q1 0.3 --p2 0.2 --q 0.1 --p 0.1 --dim 128 --report-drift --out k.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const json k = read_json("k.json");
  const double phase = std::atan2(k.at("im").get<double>(), k.at("re").get<double>());
  EXPECT_NEAR(phase, 0.02, 1e-3);
  EXPECT_LT(k.at("drift_2n").get<double>(), 1e-3);
}

TEST_F(Cli, KernelBatchFromTriples) {
  write("t.json", R"([{"q1":0,"p1":0,"q2":0,"p2":0,"q":0,"p":0},)"
                  R"({"q1":0.3,"p1":0,"q2":0,"p2":0.2,"q":0.1,"p":0.1}])");
  const auto r = run("kernel --analytic --triples t.json --out k.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read("k.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "q1,p1,q2,p2,q,p,re,im,err");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(Cli, MalformedTriplesExitOne) {
  write("t.json", R"([{"q1":0,"p1":0,"q2":0,"p2":0,"q":0,"p":0,"extra":1}])");
  EXPECT_EQ(run("kernel --analytic --triples t.json").code, 1);
  EXPECT_EQ(run("kernel --analytic --triples missing.json").code, 1);
}

TEST_F(Cli, WignerVacuumPeak) {
  const auto r = run("wigner --state vacuum --dim 32 --grid-extent 3 --grid-points 31 --out w.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const json meta = read_json("w.json");
  EXPECT_TRUE(meta.at("real_valued").get<bool>());
  const json prov = read_json("w.provenance.json");
  EXPECT_NEAR(prov.at("results").at("value_at_center").get<double>(), 2.0, 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "w.plot.json"));
  EXPECT_EQ(run("wigner --state fock:x").code, 1);
  EXPECT_EQ(run("wigner --state squeezed").code, 1);
}

TEST_F(Cli, SymbolThenStarFromFiles) {
  ASSERT_EQ(run("symbol --operator projector:0 --dim 32 --grid-extent 4 --grid-points 41 --out a.csv").code, 0);
  const auto r = run("star --a a.csv --b a.csv --dim 32 --out s.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = read_json("s.json");
  EXPECT_TRUE(s.at("real_valued").get<bool>());
  // The vacuum projector is idempotent.
  const json a = read_json("a.json");
  EXPECT_EQ(s.at("grid"), a.at("grid"));
}

TEST_F(Cli, StarRejectsBadRoute) {
  EXPECT_EQ(run("star --a coherent:0,0 --b coherent:0,0 --route fft").code, 1);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  write("cfg.json", R"({"dim": 40, "seed": 7, "grid": {"q_min":-2,"q_max":2,"p_min":-2,"p_max":2,"nq":9,"np":9}})");
  ASSERT_EQ(run("--config cfg.json --dim 24 wigner --out w.csv").code, 0);
  const json prov = read_json("w.provenance.json");
  EXPECT_EQ(prov.at("config").at("dim"), 24);
  EXPECT_EQ(prov.at("config").at("seed"), 7);
  EXPECT_EQ(prov.at("config").at("grid").at("nq"), 9);

  write("bad.json", R"({"dimension": 40})");
  EXPECT_EQ(run("--config bad.json wigner").code, 1);
  EXPECT_EQ(run("--dim 1 wigner").code, 1);
  EXPECT_EQ(run("--damping 0.1,0.2 wigner").code, 1);
}

TEST_F(Cli, StrictModeTurnsWarningsIntoExitTwo) {
  // A single damping value cannot report convergence.
  const std::string args = "kernel --damping 0.1 --order 0 --dim 64 --out k.json";
  EXPECT_EQ(run(args).code, 0);
  const auto strict = run("--strict " + args);
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.err.find("did not converge"), std::string::npos);
  EXPECT_EQ(read_json("k.provenance.json").at("exit_code"), 2);
}

TEST_F(Cli, VerifyDeformationWritesCsvAndFit) {
  const auto r = run("verify-deformation --random 4 --dim 200 --out d.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read("d.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "q1,p1,q2,p2,q,p,mu,r_num_re,r_num_im,r_ana,abs_diff,err");
  const json summary = read_json("d.summary.json");
  EXPECT_EQ(summary.at("count"), 4);
  EXPECT_NEAR(summary.at("fit").at("c2").get<double>(), 0.25, 2e-2);
}

TEST_F(Cli, KproductAndFosc) {
  ASSERT_EQ(run("kproduct --count 5 --size 6 --out kp.json").code, 0);
  EXPECT_LT(read_json("kp.json").at("associativity_defect").get<double>(), 1e-12);
  const auto f = run(R"(fosc --nonlinearity '{"kind":"q_quadratic","lambda":0.2}' --dim 20 --omega0 1 --out f.csv)");
  ASSERT_EQ(f.code, 0) << f.err;
  const json prov = read_json("f.provenance.json");
  EXPECT_LT(prov.at("results").at("max_relative_commutator_diff").get<double>(), 1e-12);
  EXPECT_LE(prov.at("results").at("amplitude_max_modulus_drift").get<double>(), 1e-15);
  EXPECT_TRUE(fs::exists(dir_ / "f.amplitude.csv"));
  EXPECT_EQ(run(R"(fosc --nonlinearity '{"kind":"cubic"}')").code, 1);
}

TEST_F(Cli, ConvergenceSweep) {
  const auto r = run("convergence --target parity-trace --dims 64,128 --schedule 0.4,0.2,0.1 "
                     "--schedule 0.4,0.2,0.1,0.05/3 --out c.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read("c.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(run("convergence --target nothing").code, 1);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  const std::string args = "kernel --q1 0.2 --q 0.5 --dim 64 --report-drift --out k.json";
  ASSERT_EQ(run(args).code, 0);
  const std::string first = read("k.json"), first_prov = read("k.provenance.json");
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(read("k.json"), first);
  EXPECT_EQ(read("k.provenance.json"), first_prov);
}
