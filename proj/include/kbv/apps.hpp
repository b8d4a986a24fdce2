#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "kbv/error.hpp"
#include "kbv/exact.hpp"
#include "kbv/laws.hpp"
#include "kbv/primes.hpp"
#include "kbv/rational.hpp"

namespace kbv {

// ---------------------------------------------------------------------------
// Prime-factor counting function omega.
// ---------------------------------------------------------------------------

struct PrimeWindow {
  double lo = 1;
  double hi = 1;
};

struct OmegaDistribution {
  std::uint64_t n = 1;
  std::string law;
  std::optional<PrimeWindow> window;
  std::vector<Rational> masses;  // index j = value of omega
  Rational mean;
  Rational variance;

  nlohmann::json to_json() const;
};

// Exact law of omega(J_n), or of the count of window primes dividing J_n.
// The full count runs a segmented pass dividing out primes <= sqrt(n); a
// window uses the SIMD divisor-count kernel.
OmegaDistribution omega_distribution(const LawSpec& law, std::optional<PrimeWindow> window = std::nullopt,
                                     const ExactLimits& limits = {});

// [1, n^{1/(3 (log log n)^2)}], the small-prime window of the Erdos-Kac proof.
PrimeWindow erdos_kac_window(std::uint64_t n);

// W1 between a discrete law on `points` (ascending) and N(mu, sigma^2),
// integrating |F - Phi| with closed forms on each step of F.
double wasserstein_step_vs_gaussian(const std::vector<double>& points, const std::vector<double>& probs, double mu,
                                    double sigma);

// W1(omega, N(mu, sigma^2)); with `standardize`, W1((omega - mu)/sigma, N(0, 1)).
double wasserstein_to_gaussian(const OmegaDistribution& dist, double mu, double sigma, bool standardize);

struct LawFamily {
  LawKind kind = LawKind::uniform;
  double s = 0;                   // pareto exponent
  std::string density = "linear";
  // (H_t) pair the family is certified against.
  double t = 1;
  double kappa = 1;

  LawSpec make(std::uint64_t n, const LawLimits& limits = {}) const;
  std::string name() const;
};

struct ErdosKacRow {
  std::uint64_t n = 1;
  double log_log_n = 0;
  double w1 = 0;
  std::optional<double> reference_rate;  // logloglog n / sqrt(loglog n); absent when <= 0
  std::optional<double> ratio;
  bool pre_asymptotic = false;  // log log n < 1
  HtCertificate certificate;
};

// Per n: certify (H_t), build the exact omega law, standardize by
// mu = sigma^2 = log log n, and compare with N(0, 1). Throws
// CertificationError when a law fails its certificate.
std::vector<ErdosKacRow> erdos_kac_experiment(const LawFamily& family, const std::vector<std::uint64_t>& n_grid,
                                              const ExactLimits& limits = {});

class CertificationError : public Error {
 public:
  CertificationError(const HtCertificate& cert, std::uint64_t n);
  const HtCertificate& certificate() const noexcept { return cert_; }

 private:
  HtCertificate cert_;
};

// ---------------------------------------------------------------------------
// Poisson approximation of the small-prime indicator process.
// ---------------------------------------------------------------------------

struct IndicatorProcessSpec {
  double a_n = 2;
  GammaSet gamma;                 // primes in [a_n, a_n^e], capped at n
  std::vector<double> positions;  // log(log p / log a_n), ascending in [0, 1]
  std::vector<Rational> intensities;

  nlohmann::json to_json() const;
};

// Window [a_n, min(a_n^e, n)]; n defaults to floor(a_n^e).
IndicatorProcessSpec make_indicator_process(double a_n, std::optional<std::uint64_t> n = std::nullopt);

// TV between sum_p Bernoulli(1/p) and Poisson(sum_p 1/p). The Poisson pmf is
// summed up to the first T with (e lambda / T)^T < 1e-30 and that bound is
// added for the rest, so the result is an upper bound within 1e-30.
struct PoissonBinomialTv {
  double tv = 0;  // rounded up
  std::uint64_t truncation = 0;
  double tail_bound = 0;
};
PoissonBinomialTv poisson_binomial_tv(std::span<const std::uint64_t> primes);

struct PoissonMarginal {
  double t = 1;
  std::size_t atoms = 0;
  bool truncated = false;  // window cut to the first max_gamma primes
  double tv = 0;           // 256-bit evaluation rounded up
  std::uint64_t poisson_truncation = 0;
  double tail_bound = 0;
  Rational lecam;          // sum p^{-2}
  double two_over_an = 0;
  bool tv_le_lecam = false;
  bool lecam_le_two_over_an = false;

  nlohmann::json to_json() const;
};

// TV between sum of Bernoulli(1/p) and Poisson(sum 1/p) over the atoms with
// position <= t, together with the Le Cam sum and 2/a_n.
PoissonMarginal poisson_marginal_tv(const IndicatorProcessSpec& spec, double t, const ExactLimits& limits = {});

struct PoissonProcessReport {
  std::size_t atoms = 0;
  bool truncated = false;
  Rational valuation_tv;    // d_TV(v^n, g^n) over the window
  double coupling_sum = 0;  // sum_p TV(Bernoulli(1/p), Poisson(1/p)) = sum_p (1/p)(1 - e^{-1/p})
  double two_over_an = 0;
  double rhs = 0;           // valuation_tv + 2/a_n
  bool coupling_le_two_over_an = false;

  nlohmann::json to_json() const;
};

PoissonProcessReport poisson_process_bound(const IndicatorProcessSpec& spec, const LawSpec& law,
                                           const ExactLimits& limits = {});

}  // namespace kbv
