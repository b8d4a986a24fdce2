#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kbv/cli.hpp"
#include "kbv/error.hpp"

using namespace kbv::cli;

namespace {

struct Captured {
  int status;
  std::string out;
  std::string err;
};

Captured invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "kbv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int status = kbv::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

}  // namespace

TEST(Config, RoundTripIsByteIdentical) {
  ExperimentConfig c;
  c.command = "partition";
  c.law = "pareto";
  c.s = 0.1;
  c.n = 12345;
  c.n_grid = {10, 100};
  c.gamma_primes = {2, 3, 5};
  c.gamma_lo = 2.5;
  c.delta = 0.3;
  c.C = 1.0 / 3.0;
  c.positions = {0.25, 1.0};
  c.output = "csv";
  const std::string text = c.serialize();
  const ExperimentConfig back = ExperimentConfig::parse(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(ExperimentConfig::parse(ExperimentConfig{}.serialize()).serialize(), ExperimentConfig{}.serialize());
}

TEST(Config, RejectsUnknownKeysAndCommands) {
  EXPECT_THROW(ExperimentConfig::parse(R"({"bogus": 1})"), kbv::ParameterError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"command": "nope"})"), kbv::ParameterError);
  EXPECT_THROW(ExperimentConfig::parse("not json"), kbv::ParameterError);
}

TEST(Cli, TvExactGolden) {
  const auto r = invoke({"tv-exact", "--law", "uniform", "--n", "4", "--gamma-primes", "2"});
  EXPECT_EQ(r.status, kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["result"]["tv"], "1/8");
  EXPECT_EQ(j["mode"], "exact");
  EXPECT_EQ(j["kbv_version"], std::string(version()));
  EXPECT_EQ(j["config"]["n"], 4);
}

TEST(Cli, TvExactAcceptsPrimeAboveN) {
  const auto r = invoke({"tv-exact", "--n", "1", "--gamma-primes", "2"});
  EXPECT_EQ(r.status, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(r.out)["result"]["tv"], "1/2");
}

TEST(Cli, CertifyPareto) {
  const auto r = invoke({"certify-ht", "--law", "pareto", "--s", "0.5", "--n", "1000", "--t", "0.5", "--kappa", "3"});
  EXPECT_EQ(r.status, kExitOk);
  const auto cert = nlohmann::json::parse(r.out)["result"]["certificates"][0];
  EXPECT_TRUE(cert["holds"].get<bool>());
  EXPECT_LE(cert["required_kappa"].get<double>(), 3.0);
}

TEST(Cli, BoundIsVacuousButOk) {
  const auto r = invoke({"bound", "--t", "1", "--kappa", "1", "--epsilon", "1", "--n", "1000000", "--gamma-size", "10"});
  EXPECT_EQ(r.status, kExitOk);
  const auto th = nlohmann::json::parse(r.out)["result"]["theorem"];
  EXPECT_NEAR(th["value"].get<double>(), 7.02837, 1e-5);
  EXPECT_EQ(th["branch"], "rho_log_rho");
  EXPECT_TRUE(th["vacuous"].get<bool>());
}

TEST(Cli, PartitionBonferroniPoissonSweepErdosKac) {
  auto r = invoke({"partition", "--n", "10000", "--gamma-size", "5", "--delta", "0.2"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["result"]["verdicts"]["additivity"].get<bool>());
  EXPECT_TRUE(j["result"]["verdicts"]["many_le_bound"].get<bool>());
  EXPECT_TRUE(j["result"]["verdicts"]["high_le_bound"].get<bool>());

  r = invoke({"bonferroni", "--n", "1000", "--gamma-size", "5", "--law", "pareto", "--s", "0.5"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out)["result"]["failures"].empty());

  r = invoke({"poisson", "--a-n", "50", "--output", "csv"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("# kbv-report v1\n", 0), 0U);

  r = invoke({"sweep", "--n", "1000000", "--gamma-size", "10", "--deltas", "0.2,0.3", "--epsilons", "1"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["result"]["rows"].size(), 2U);

  r = invoke({"erdos-kac", "--n-grid", "1000,10000"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["result"]["decreasing_steps"], 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({"nope"}).status, kExitUsage);
  EXPECT_EQ(invoke({}).status, kExitUsage);
  const auto missing = invoke({"tv-exact", "--n", "4"});
  EXPECT_EQ(missing.status, kExitUsage);
  EXPECT_NE(missing.err.find("cli:"), std::string::npos);
  const auto bad_law = invoke({"tv-exact", "--n", "4", "--gamma-primes", "2", "--law", "pareto", "--s", "1.5"});
  EXPECT_EQ(bad_law.status, kExitUsage);
  EXPECT_NE(bad_law.err.find("laws:"), std::string::npos);
  EXPECT_EQ(invoke({"tv-exact", "--n", "4", "--gamma-primes", "4"}).status, kExitUsage);
  EXPECT_EQ(invoke({"partition", "--n", "100", "--gamma-size", "3", "--mode", "float"}).status, kExitUsage);
  EXPECT_EQ(invoke({"tv-exact", "--n", "100", "--gamma-size", "17"}).status, kExitUsage);
}

TEST(Cli, CertificationRefusal) {
  const auto r = invoke({"erdos-kac", "--n-grid", "1000", "--t", "2"});
  EXPECT_EQ(r.status, kExitUsage);
  EXPECT_NE(r.err.find("required_kappa"), std::string::npos);
}

TEST(Cli, FloatMode) {
  const auto r = invoke({"tv-exact", "--n", "10000", "--gamma-size", "4", "--mode", "float"});
  EXPECT_EQ(r.status, kExitOk);
  const auto exact = invoke({"tv-exact", "--n", "10000", "--gamma-size", "4"});
  const double f = nlohmann::json::parse(r.out)["result"]["tv"].get<double>();
  const double e = std::stod(nlohmann::json::parse(exact.out)["result"]["tv_decimal"].get<std::string>());
  EXPECT_NEAR(f, e, 1e-14);
}

TEST(Cli, DeterministicReports) {
  for (const std::vector<std::string>& args : std::vector<std::vector<std::string>>{
           {"partition", "--n", "5000", "--gamma-size", "4", "--jobs", "3"},
           {"bonferroni", "--n", "500", "--gamma-size", "3", "--output", "csv"},
           {"poisson", "--a-n", "10"}}) {
    const auto a = invoke(args);
    const auto b = invoke(args);
    EXPECT_EQ(a.status, kExitOk);
    EXPECT_EQ(a.out, b.out);
  }
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = std::filesystem::temp_directory_path() / "kbv_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "config.json";
  const auto dumped = invoke({"tv-exact", "--n", "4", "--gamma-primes", "2", "--dump-config"});
  ASSERT_EQ(dumped.status, kExitOk);
  {
    std::ofstream out(path);
    out << dumped.out;
  }
  const auto from_file = invoke({"--config", path.string()});
  EXPECT_EQ(from_file.status, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(from_file.out)["result"]["tv"], "1/8");
  EXPECT_EQ(from_file.out, invoke({"tv-exact", "--n", "4", "--gamma-primes", "2"}).out);

  const auto overridden = invoke({"--config", path.string(), "--n", "1"});
  EXPECT_EQ(nlohmann::json::parse(overridden.out)["result"]["tv"], "1/2");

  // The config embedded in a report reproduces that report.
  const auto report = nlohmann::json::parse(invoke({"bound", "--n", "100000", "--gamma-size", "6"}).out);
  {
    std::ofstream out(path);
    out << report["config"].dump();
  }
  EXPECT_EQ(nlohmann::json::parse(invoke({"--config", path.string()}).out), report);
  std::filesystem::remove_all(dir);
}

TEST(Cli, ReportDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "kbv_report_dir_test";
  std::filesystem::remove_all(dir);
  ::setenv("KBV_REPORT_DIR", dir.c_str(), 1);
  const auto r = invoke({"tv-exact", "--n", "4", "--gamma-primes", "2", "--output", "csv"});
  ::unsetenv("KBV_REPORT_DIR");
  ASSERT_EQ(r.status, kExitOk);
  std::ifstream in(dir / "tv-exact.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), r.out);
  EXPECT_NE(r.out.find("1/8"), std::string::npos);
  std::filesystem::remove_all(dir);
}
