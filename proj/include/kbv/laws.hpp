#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kbv/rational.hpp"

namespace kbv {

enum class LawKind { uniform, pareto, density, custom };

std::string law_kind_name(LawKind kind);

struct LawLimits {
  // Largest n for which non-uniform laws are materialized as dense arrays.
  std::uint64_t max_dense_n = 10'000'000;
};

// Law of J_n on [n] held as integer weights w(k) with mass w(k) / W.
// Uniform laws keep no array (every weight is 1), so they work for any n.
class LawSpec {
 public:
  std::uint64_t n() const noexcept { return n_; }
  LawKind kind() const noexcept { return kind_; }
  const std::string& descriptor() const noexcept { return descriptor_; }
  bool unit_weights() const noexcept { return weights_.empty(); }

  BigInt weight(std::uint64_t k) const;
  const BigInt& total_weight() const noexcept { return total_; }
  const std::vector<BigInt>& weights() const noexcept { return weights_; }
  Rational mass(std::uint64_t k) const;

  // Relative error of every mass against the law the descriptor names. Zero
  // for laws whose masses are rational; positive for Pareto laws with s != 0
  // whose weights come from rounded high-precision powers.
  double relative_mass_error() const noexcept { return relative_error_; }

  // Custom masses that did not sum to 1 were rescaled.
  bool renormalized() const noexcept { return renormalized_; }

  nlohmann::json to_json() const;

 private:
  friend LawSpec make_uniform_law(std::uint64_t n);
  friend LawSpec make_pareto_law(std::uint64_t n, double s, const LawLimits& limits);
  friend LawSpec make_weighted_law(std::uint64_t n, LawKind kind, std::string descriptor,
                                   const std::vector<Rational>& masses, const LawLimits& limits);

  std::uint64_t n_ = 1;
  LawKind kind_ = LawKind::uniform;
  std::string descriptor_ = "uniform";
  std::vector<BigInt> weights_;  // index k - 1; empty when all weights are 1
  BigInt total_ = 1;
  double relative_error_ = 0.0;
  bool renormalized_ = false;
};

LawSpec make_uniform_law(std::uint64_t n);

// Truncated Pareto pi_{n,s}(k) proportional to k^{-s}, s in [0, 1).
LawSpec make_pareto_law(std::uint64_t n, double s, const LawLimits& limits = {});

// Masses proportional to nonnegative rationals (index k - 1). Used for the
// density and custom families.
LawSpec make_weighted_law(std::uint64_t n, LawKind kind, std::string descriptor,
                          const std::vector<Rational>& masses, const LawLimits& limits = {});

// P[J_n = k] = c_n * upsilon(k).
LawSpec make_density_law(std::uint64_t n, const std::function<Rational(std::uint64_t)>& upsilon,
                         std::string descriptor, const LawLimits& limits = {});

// Density families named on the command line:
//   "linear"       upsilon(k) = k
//   "pow:E"        upsilon(k) = k^E, integer E >= 0
//   "affine:A,B"   upsilon(k) = A + B k, rationals
LawSpec make_density_law(std::uint64_t n, const std::string& descriptor, const LawLimits& limits = {});

// Custom law from (k, mass) pairs; k outside [1, n] or repeated is rejected.
LawSpec make_custom_law(std::uint64_t n, const std::vector<std::pair<std::uint64_t, Rational>>& entries,
                        const LawLimits& limits = {});

// CSV lines "k,numerator,denominator"; '#' comments and a header line whose
// first field is not numeric are skipped. n defaults to the largest k.
LawSpec load_custom_law_csv(const std::filesystem::path& path, std::optional<std::uint64_t> n = std::nullopt,
                            const LawLimits& limits = {});

// Prefix sums S(a) = sum_{k <= n, a | k} w(k) for every a <= n, so that
// P[a | J_n] = S(a) / W. Uniform laws use S(a) = floor(n / a) directly.
class DivisorSums {
 public:
  explicit DivisorSums(const LawSpec& law);

  const LawSpec& law() const noexcept { return *law_; }
  BigInt sum(std::uint64_t a) const;
  BigInt sum(const BigInt& a) const;
  Rational probability(std::uint64_t a) const;

 private:
  const LawSpec* law_;
  std::vector<BigInt> sums_;
};

// P[a | J_n], exact.
Rational divisor_probability(const LawSpec& law, std::uint64_t a);

struct HtCertificate {
  double t = 0;
  double kappa = 1;                 // the caller's kappa
  Rational max_dev;                 // max_{a in [n]} |P[a | J_n] - 1/a|
  std::uint64_t argmax_dev = 1;
  Rational max_ratio;               // max_{a in [n]} a P[a | J_n]
  std::uint64_t argmax_ratio = 1;
  Rational beyond_n_dev;            // 1/(n+1): the largest deviation at a > n
  double required_kappa = 1;        // tightest kappa >= 1 for this t
  double interval_error = 0;        // absolute error bound carried by the masses
  bool holds = false;               // caller's (kappa, t) satisfies both bounds
  bool renormalized = false;

  nlohmann::json to_json() const;
};

// Scans a in [n] exactly. For t > 1 the a > n range is covered by its worst
// case a = n + 1.
HtCertificate certify_ht(const LawSpec& law, double t, double kappa = 1.0);

// (1/2) sum_k |P[J_n = k] - 1/n|.
Rational tv_to_uniform(const LawSpec& law);

}  // namespace kbv
