#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kbv::cli {

std::string_view version() noexcept;

// Everything a run depends on. Serialized with sorted keys so that
// serialize(parse_config(serialize(c))) == serialize(c) byte for byte.
struct ExperimentConfig {
  // tv-exact | certify-ht | bound | partition | bonferroni | erdos-kac | poisson | sweep
  std::string command = "tv-exact";

  // Law: uniform | pareto (s) | density (descriptor) | custom (CSV path).
  std::string law = "uniform";
  double s = 0.0;
  std::string density = "linear";
  std::string law_csv;

  std::optional<std::uint64_t> n;
  std::vector<std::uint64_t> n_grid;

  // Gamma, by priority: explicit primes, window [lo, hi], beta (primes <= n^{1/beta}), first K primes.
  std::vector<std::uint64_t> gamma_primes;
  std::optional<double> gamma_lo;
  std::optional<double> gamma_hi;
  std::optional<double> gamma_beta;
  std::optional<std::size_t> gamma_size;

  double t = 1.0;
  double kappa = 1.0;
  double epsilon = 1.0;
  std::optional<double> delta;  // t/4 when absent
  double C = 1.0;

  // partition: thresholds override delta rho and the matching beta.
  std::optional<double> alpha;
  std::optional<double> beta_m;
  // bonferroni: largest |m| enumerated.
  unsigned max_total = 6;
  // poisson
  std::optional<double> a_n;
  std::vector<double> positions;
  // sweep
  std::vector<double> deltas;
  std::vector<double> epsilons;

  std::string mode = "exact";   // exact | float
  std::string output = "json";  // json | csv
  std::uint64_t seed = 0;       // reserved for the float mode's summation order
  unsigned jobs = 1;
  std::size_t max_gamma = 16;
  std::uint64_t max_n = 10'000'000;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string serialize() const;  // pretty JSON with a trailing newline
  static ExperimentConfig parse(const std::string& text);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitViolation = 2;

struct RunResult {
  int status = kExitOk;
  std::string report;  // rendered in config.output format
};

// Executes the configured command. Module errors become kExitUsage with the
// message on `err`; a failed hard inequality yields kExitViolation and still
// produces a report.
RunResult run(const ExperimentConfig& config, std::ostream& err);

// Full command-line entry: parses argv, runs, prints the report to `out` and
// writes it to $KBV_REPORT_DIR/<command>.<json|csv> when that variable is set.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kbv::cli
