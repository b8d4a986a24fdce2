#pragma once

// Closed-form bounds on d_TV(v^n, g^n) and its pieces. All evaluators are
// plain double-precision functions; comparisons against exact sums go through
// le_rounded_down so a pass never depends on the last ulp.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "kbv/primes.hpp"
#include "kbv/rational.hpp"

namespace kbv {

struct BoundParams {
  double t = 1.0;
  double kappa = 1.0;
  double epsilon = 1.0;
  double delta = 0.25;
  std::uint64_t n = 1;
  const GammaSet* gamma = nullptr;

  // Throws ParameterError for t <= 0, kappa < 1, epsilon <= 0, delta <= 0 or a
  // missing Gamma.
  void validate() const;
  double rho() const;  // throws PreconditionError when |Gamma| < 2
};

// delta = t/4: inside (0, t/3).
double default_delta(double t);

// log|Gamma| * tau^{1+eps} <= log n, the logarithmic form of
// |Gamma| <= n^{tau^{-1-eps}}.
bool cardinality_condition(const GammaSet& gamma, double epsilon);

struct Theorem1Bound {
  double value = 0;
  double c = 0;
  // "rho_log_rho" when rho log rho < log n, else "log_n".
  std::string branch;
  bool cardinality_ok = false;
  bool small_gamma_warning = false;
  bool vacuous() const { return value > 1.0; }
  nlohmann::json to_json() const;
};

// (7 + 4 kappa) exp(-c min(rho log rho, log n)), c = t min(1, eps) / (12 (1 + eps)).
Theorem1Bound theorem1_bound(const BoundParams& params);

// (2 + kappa) exp(-(delta eps / (1 + eps)) rho log rho + delta (1 - log delta) rho).
double lemma_many_bound(double delta, double epsilon, double kappa, double rho);

struct LemmaHighBound {
  double value = 0;
  double alpha = 0;  // delta rho
  double beta = 0;   // 2 delta rho log rho / ((1 + eps) log 1.5)
};

// (2 + kappa) exp(-(delta / (1 + eps)) rho log rho + 5 log(1.5) delta rho + log(delta rho)).
LemmaHighBound lemma_high_bound(double delta, double epsilon, double kappa, double rho);

double alpha_threshold(double delta, double rho);
double beta_threshold(double delta, double epsilon, double rho);

// Largest odd integer <= alpha, or nullopt when alpha < 1.
std::optional<unsigned> largest_odd_at_most(double alpha);

struct LemmaBonfBound {
  double value = 0;
  double c = 0;
  std::optional<unsigned> gamma_n;
};

// (3 + 2 kappa) exp(-c min(log n, rho log rho)), c = min(t - 3 delta, delta eps / (2 (1 + eps))).
// Requires delta in (0, t/3).
LemmaBonfBound lemma_bonf_bound(const BoundParams& params);

struct TruncationRemainder {
  unsigned truncation = 1;
  bool else_branch = false;  // sqrt(beta |Gamma|) > alpha
  // 3/sqrt(g) (e tau/g)^g alpha (2e)^{2 tau} + 2(1+kappa)|Gamma|^{g+1}/n * (case factor)
  double as_displayed = 0;
  // 6 kappa/sqrt(g) (e tau/g)^g alpha (2e)^{2 tau} + 4|Gamma|^{g+1}/n^t * (case factor),
  // assembled from the two intermediate estimates instead.
  double as_derived = 0;
  nlohmann::json to_json() const;
};

// Case factor: alpha e^{2 alpha} when sqrt(beta |Gamma|) <= alpha, else
// alpha (e^2 beta |Gamma| / alpha^2)^alpha.
TruncationRemainder truncation_remainder_bound(unsigned truncation, const BoundParams& params);

// C 4^{|Gamma|} log(n) / n.
double rough_bound(std::uint64_t n, std::size_t gamma_size, double C);

// (e lambda / x)^x for 0 < lambda < x.
double chernoff_poisson_tail(double lambda, double x);

// sum_{k >= ceil(x)} lambda^k / k! evaluated at 256-bit precision and rounded
// up to double. lambda > 0, x >= 0.
double exact_poisson_series_tail(const Rational& lambda, std::uint64_t x);

}  // namespace kbv
