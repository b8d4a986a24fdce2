#include "kbv/bounds.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kbv/error.hpp"

namespace kbv {
namespace {

const double kLog15 = std::log(1.5);

void require_rho_above_one(double rho) {
  if (!(rho > 1.0)) throw PreconditionError("bounds", "rho must exceed 1 (log rho <= 0 leaves the regime empty)");
}

}  // namespace

void BoundParams::validate() const {
  if (!(t > 0)) throw ParameterError("bounds", "t must be positive");
  if (!(kappa >= 1)) throw ParameterError("bounds", "kappa must be >= 1");
  if (!(epsilon > 0)) throw ParameterError("bounds", "epsilon must be positive");
  if (!(delta > 0)) throw ParameterError("bounds", "delta must be positive");
  if (gamma == nullptr) throw ParameterError("bounds", "a Gamma set is required");
  if (n == 0) throw ParameterError("bounds", "n must be >= 1");
}

double BoundParams::rho() const {
  if (gamma == nullptr || !gamma->rho()) {
    throw PreconditionError("bounds", "rho is undefined for |Gamma| < 2");
  }
  return std::log(static_cast<double>(n)) / std::log(static_cast<double>(gamma->size()));
}

double default_delta(double t) { return t / 4.0; }

bool cardinality_condition(const GammaSet& gamma, double epsilon) {
  if (gamma.size() <= 1) return true;  // log |Gamma| <= 0
  const double tau = to_double(gamma.tau());
  return std::log(static_cast<double>(gamma.size())) * std::pow(tau, 1.0 + epsilon) <=
         std::log(static_cast<double>(gamma.n()));
}

nlohmann::json Theorem1Bound::to_json() const {
  return {{"value", value},
          {"c", c},
          {"branch", branch},
          {"cardinality_ok", cardinality_ok},
          {"small_gamma_warning", small_gamma_warning},
          {"vacuous", vacuous()}};
}

Theorem1Bound theorem1_bound(const BoundParams& params) {
  params.validate();
  const double rho = params.rho();
  const double log_n = std::log(static_cast<double>(params.n));
  Theorem1Bound out;
  out.c = params.t * std::min(1.0, params.epsilon) / (12.0 * (1.0 + params.epsilon));
  const double rho_log_rho = rho * std::log(rho);
  out.branch = rho_log_rho < log_n ? "rho_log_rho" : "log_n";
  out.value = (7.0 + 4.0 * params.kappa) * std::exp(-out.c * std::min(rho_log_rho, log_n));
  out.cardinality_ok = cardinality_condition(*params.gamma, params.epsilon);
  out.small_gamma_warning = params.gamma->small_gamma_warning();
  return out;
}

double lemma_many_bound(double delta, double epsilon, double kappa, double rho) {
  if (!(delta > 0)) throw ParameterError("bounds", "delta must be positive");
  require_rho_above_one(rho);
  const double exponent =
      -(delta * epsilon / (1.0 + epsilon)) * rho * std::log(rho) + delta * (1.0 - std::log(delta)) * rho;
  return (2.0 + kappa) * std::exp(exponent);
}

double alpha_threshold(double delta, double rho) { return delta * rho; }

double beta_threshold(double delta, double epsilon, double rho) {
  return 2.0 * delta / ((1.0 + epsilon) * kLog15) * rho * std::log(rho);
}

LemmaHighBound lemma_high_bound(double delta, double epsilon, double kappa, double rho) {
  if (!(delta > 0)) throw ParameterError("bounds", "delta must be positive");
  require_rho_above_one(rho);
  LemmaHighBound out;
  out.alpha = alpha_threshold(delta, rho);
  out.beta = beta_threshold(delta, epsilon, rho);
  const double exponent = -(delta / (1.0 + epsilon)) * rho * std::log(rho) + 5.0 * kLog15 * delta * rho +
                          std::log(delta * rho);
  out.value = (2.0 + kappa) * std::exp(exponent);
  return out;
}

std::optional<unsigned> largest_odd_at_most(double alpha) {
  if (!(alpha >= 1.0)) return std::nullopt;
  auto k = static_cast<unsigned>(std::floor(alpha));
  if (k % 2 == 0) --k;
  return k;
}

LemmaBonfBound lemma_bonf_bound(const BoundParams& params) {
  params.validate();
  if (!(params.delta < params.t / 3.0)) throw PreconditionError("bounds", "delta must lie in (0, t/3)");
  const double rho = params.rho();
  const double log_n = std::log(static_cast<double>(params.n));
  LemmaBonfBound out;
  out.c = std::min(params.t - 3.0 * params.delta, params.delta * params.epsilon / (2.0 * (1.0 + params.epsilon)));
  out.value = (3.0 + 2.0 * params.kappa) * std::exp(-out.c * std::min(log_n, rho * std::log(rho)));
  out.gamma_n = largest_odd_at_most(alpha_threshold(params.delta, rho));
  return out;
}

nlohmann::json TruncationRemainder::to_json() const {
  return {{"truncation", truncation},
          {"else_branch", else_branch},
          {"as_displayed", as_displayed},
          {"as_derived", as_derived}};
}

TruncationRemainder truncation_remainder_bound(unsigned truncation, const BoundParams& params) {
  params.validate();
  if (truncation % 2 == 0) throw PreconditionError("bounds", "truncation must be an odd positive integer");
  const double rho = params.rho();
  const double g = truncation;
  const double alpha = alpha_threshold(params.delta, rho);
  const double beta = beta_threshold(params.delta, params.epsilon, rho);
  const double tau = to_double(params.gamma->tau());
  const double size = static_cast<double>(params.gamma->size());
  const double n = static_cast<double>(params.n);
  const double e = std::numbers::e;

  const double stirling_part = std::pow(e * tau / g, g) * alpha * std::pow(2.0 * e, 2.0 * tau) / std::sqrt(g);
  TruncationRemainder out;
  out.truncation = truncation;
  out.else_branch = std::sqrt(beta * size) > alpha;
  const double case_factor =
      out.else_branch ? alpha * std::pow(e * e * beta * size / (alpha * alpha), alpha) : alpha * std::exp(2.0 * alpha);
  const double size_power = std::pow(size, g + 1.0);
  out.as_displayed = 3.0 * stirling_part + 2.0 * (1.0 + params.kappa) * size_power / n * case_factor;
  out.as_derived =
      6.0 * params.kappa * stirling_part + 4.0 * size_power / std::pow(n, params.t) * case_factor;
  return out;
}

double rough_bound(std::uint64_t n, std::size_t gamma_size, double C) {
  if (!(C > 0)) throw ParameterError("bounds", "C must be positive");
  if (n == 0) throw ParameterError("bounds", "n must be >= 1");
  const double dn = static_cast<double>(n);
  return C * std::pow(4.0, static_cast<double>(gamma_size)) * std::log(dn) / dn;
}

double chernoff_poisson_tail(double lambda, double x) {
  if (!(lambda > 0) || !(lambda < x)) throw PreconditionError("bounds", "Chernoff tail requires 0 < lambda < x");
  return std::pow(std::numbers::e * lambda / x, x);
}

double exact_poisson_series_tail(const Rational& lambda, std::uint64_t x) {
  if (sgn(lambda) <= 0) throw PreconditionError("bounds", "lambda must be positive");
  constexpr mpfr_prec_t prec = 256;
  mpfr_t lam;
  mpfr_t term;
  mpfr_t sum;
  mpfr_t tmp;
  mpfr_inits2(prec, lam, term, sum, tmp, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_q(lam, lambda.get_mpq_t(), MPFR_RNDU);
  // term = lambda^x / x!
  mpfr_pow_ui(term, lam, x, MPFR_RNDU);
  mpfr_fac_ui(tmp, x, MPFR_RNDD);
  mpfr_div(term, term, tmp, MPFR_RNDU);
  mpfr_set_zero(sum, 1);
  for (std::uint64_t k = x;; ++k) {
    mpfr_add(sum, sum, term, MPFR_RNDU);
    mpfr_mul(term, term, lam, MPFR_RNDU);
    mpfr_div_ui(term, term, k + 1, MPFR_RNDU);
    // Once lambda / (k + 2) <= 1/2 the rest of the series is at most 2 * term.
    const bool geometric = mpfr_cmp_ui(lam, (k + 2) / 2) <= 0;
    mpfr_mul_2si(tmp, sum, -(prec + 8), MPFR_RNDN);
    if (geometric && mpfr_cmp(term, tmp) < 0) {
      mpfr_mul_2ui(term, term, 1, MPFR_RNDU);
      mpfr_add(sum, sum, term, MPFR_RNDU);
      break;
    }
  }
  const double out = mpfr_get_d(sum, MPFR_RNDU);
  mpfr_clears(lam, term, sum, tmp, static_cast<mpfr_ptr>(nullptr));
  return out;
}

}  // namespace kbv
