#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "healthshock/cli.hpp"

using namespace healthshock;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "healthshock");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("healthshock_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("solve writes the coefficient tables and summary") {
  const fs::path dir = scratch("solve");
  const Run r = run({"solve", "--config", "paper_defaults", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  for (const char* f : {"dead_coeffs.csv", "alive_coeffs.csv", "summary.csv"}) CHECK(fs::exists(dir / f));
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.rfind("# healthshock 1.0.0 config_hash=", 0) == 0);
  CHECK(summary.find("B(0),10.3905") != std::string::npos);
}

TEST_CASE("invalid overrides are usage errors") {
  const Run r = run({"solve", "--set", "market.mu=0.02", "--out", scratch("mu").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("market.mu") != std::string::npos);
  CHECK(run({"solve", "--set", "market.unknown=1"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"solve", "--help"}).code == kExitOk);
}

TEST_CASE("simulate is reproducible and rejects zero paths") {
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  const std::vector<std::string> common = {"simulate", "--seed", "11", "--paths", "40", "--dt", "0.05"};
  auto with_out = [&](const fs::path& d) {
    auto v = common;
    v.insert(v.end(), {"--out", d.string()});
    return v;
  };
  CHECK(run(with_out(a)).code == kExitOk);
  CHECK(run(with_out(b)).code == kExitOk);
  CHECK(slurp(a / "mc_report.csv") == slurp(b / "mc_report.csv"));
  CHECK(slurp(a / "paths.csv") == slurp(b / "paths.csv"));
  CHECK(run({"simulate", "--paths", "0", "--out", scratch("sim0").string()}).code == kExitUsage);
  CHECK(run({"simulate", "--perturb", "leverage:2", "--out", scratch("simp").string()}).code == kExitUsage);
}

TEST_CASE("simulate with a perturbation reports both policies") {
  const fs::path d = scratch("sim_perturb");
  const Run r = run({"simulate", "--paths", "200", "--dt", "0.05", "--perturb", "consumption:1.1",
                     "--set", "hazard.excess.1.k1=0", "--set", "hazard.excess.1.k2=0", "--set", "income.y0=0",
                     "--out", d.string()});
  CHECK(r.code == kExitOk);
  const std::string report = slurp(d / "mc_report.csv");
  CHECK(report.find("\noptimal,") != std::string::npos);
  CHECK(report.find("\nconsumption:1.1,") != std::string::npos);
}

TEST_CASE("verify: corruption fails with diagnostics, empty grid is a usage error") {
  const Run ansatz = run({"verify", "--coupling", "ansatz", "--out", scratch("ver_ok").string()});
  CHECK(ansatz.code == kExitOk);
  CHECK(ansatz.out.find("overall: PASS") != std::string::npos);
  const Run bad = run({"verify", "--coupling", "ansatz", "--corrupt", "g:1e-3", "--out", scratch("ver_g").string()});
  CHECK(bad.code == kExitCheckFailed);
  CHECK(bad.out.find("dead_hjb: FAIL") != std::string::npos);
  CHECK(bad.out.find("t=") != std::string::npos);
  CHECK(run({"verify", "--grid", "0x20x10", "--out", scratch("ver_0").string()}).code == kExitUsage);
  CHECK(run({"verify", "--grid", "banana", "--out", scratch("ver_b").string()}).code == kExitUsage);
}

TEST_CASE("verify with exact coupling reports the healthy-state residual") {
  const fs::path d = scratch("ver_exact");
  const Run r = run({"verify", "--grid", "10x8x4", "--out", d.string()});
  CHECK(r.code == kExitCheckFailed);
  CHECK(r.out.find("alive_hjb state 0 (exact coupling): FAIL") != std::string::npos);
  CHECK(r.out.find("alive_hjb state 1 (exact coupling): PASS") != std::string::npos);
  CHECK(fs::exists(d / "verify_report.csv"));
}

TEST_CASE("calibrate") {
  const fs::path d = scratch("cal");
  {
    std::ofstream t(d / "mort.csv");
    t << "age,rate\n" << std::setprecision(17);
    for (int age = 20; age <= 60; ++age) t << age << ',' << std::exp((age - 92.29736) / 12.14982) / 12.14982 << '\n';
    std::ofstream bad(d / "bad.csv");
    bad << "age,rate\n20,0.001\n21;0.002\n";
  }
  const Run r = run({"calibrate", "--model", "gompertz", "--table", (d / "mort.csv").string(), "--out", d.string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(d / "fit_gompertz.csv"));
  CHECK(r.out.find("n,12.1498") != std::string::npos);

  const Run parse = run({"calibrate", "--table", (d / "bad.csv").string(), "--out", d.string()});
  CHECK(parse.code == kExitUsage);
  CHECK(parse.err.find("bad.csv:3") != std::string::npos);

  CHECK(run({"calibrate", "--model", "illness", "--table", (d / "mort.csv").string(), "--out", d.string()}).code ==
        kExitUsage);
  CHECK(run({"calibrate", "--model", "illness", "--table", (d / "mort.csv").string(), "--base",
             (d / "fit_gompertz.csv").string(), "--out", d.string()})
            .code == kExitOk);
  CHECK(run({"calibrate", "--model", "cubic", "--table", (d / "mort.csv").string()}).code == kExitUsage);
}

TEST_CASE("sweep writes CSV and plot script") {
  const fs::path d = scratch("sweep");
  const Run r = run({"sweep", "--axis", "k1", "--out", d.string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(d / "sweep_k1.csv"));
  CHECK(fs::exists(d / "sweep_k1.gp"));
  CHECK(run({"sweep", "--axis", "market.sigma", "--values", "0.15,0.25", "--out", d.string()}).code == kExitOk);
  CHECK(fs::exists(d / "sweep_market.sigma.csv"));
  CHECK(run({"sweep", "--out", d.string()}).code == kExitUsage);
}
