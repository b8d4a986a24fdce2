#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "kbv/bounds.hpp"
#include "kbv/error.hpp"

using namespace kbv;

namespace {

constexpr double kE = std::numbers::e;

BoundParams params_for(const GammaSet& g, double t = 1, double kappa = 1, double eps = 1) {
  BoundParams p;
  p.t = t;
  p.kappa = kappa;
  p.epsilon = eps;
  p.delta = default_delta(t);
  p.n = g.n();
  p.gamma = &g;
  return p;
}

}  // namespace

TEST(MainBound, Example) {
  const GammaSet g = gamma_first_primes(1'000'000, 10);
  const Theorem1Bound b = theorem1_bound(params_for(g));
  // c = 1/24; rho = 6; rho log rho = 10.75 < log n = 13.8.
  EXPECT_DOUBLE_EQ(b.c, 1.0 / 24.0);
  EXPECT_EQ(b.branch, "rho_log_rho");
  EXPECT_NEAR(b.value, 11.0 * std::exp(-6.0 * std::log(6.0) / 24.0), 1e-12);
  EXPECT_NEAR(b.value, 7.02837, 1e-5);
  EXPECT_TRUE(b.vacuous());
  EXPECT_FALSE(b.small_gamma_warning);
}

TEST(MainBound, LogBranchAndPreconditions) {
  // rho large: 2 primes at n = 10^6 gives rho log rho > log n.
  const GammaSet g(1'000'000, {2, 3});
  const Theorem1Bound b = theorem1_bound(params_for(g));
  EXPECT_EQ(b.branch, "log_n");
  EXPECT_TRUE(b.small_gamma_warning);
  EXPECT_THROW(theorem1_bound(params_for(GammaSet(100, {2}))), PreconditionError);
  BoundParams bad = params_for(g);
  bad.kappa = 0.5;
  EXPECT_THROW(theorem1_bound(bad), ParameterError);
  bad = params_for(g);
  bad.t = 0;
  EXPECT_THROW(theorem1_bound(bad), ParameterError);
}

TEST(MainBound, NonincreasingInN) {
  const std::vector<std::uint64_t> primes{2, 3, 5, 7, 11, 13, 17, 19};
  double previous = INFINITY;
  for (std::uint64_t n = 100; n <= 100'000'000; n *= 10) {
    const GammaSet g(n, primes);
    const double v = theorem1_bound(params_for(g)).value;
    EXPECT_LE(v, previous);
    previous = v;
  }
}

TEST(MainBound, CardinalityCondition) {
  EXPECT_TRUE(cardinality_condition(gamma_first_primes(1'000'000, 10), 1.0));
  // Many primes relative to n fails the condition.
  EXPECT_FALSE(cardinality_condition(gamma_window(1000, 2, 1000), 1.0));
}

TEST(ManyBound, Examples) {
  // delta = e: the middle term vanishes.
  EXPECT_NEAR(lemma_many_bound(kE, 1.0, 1.0, 5.0), 3.0 * std::exp(-(kE / 2.0) * 5.0 * std::log(5.0)), 1e-12);
  // Leading constant 2 + kappa.
  EXPECT_NEAR(lemma_many_bound(kE, 1.0, 1.0, 5.0) / std::exp(-(kE / 2.0) * 5.0 * std::log(5.0)), 3.0, 1e-12);
  EXPECT_NEAR(lemma_many_bound(0.5, 1.0, 3.0, 4.0),
              5.0 * std::exp(-0.25 * 4.0 * std::log(4.0) + 0.5 * (1.0 - std::log(0.5)) * 4.0), 1e-12);
  EXPECT_THROW(lemma_many_bound(0.5, 1.0, 1.0, 1.0), PreconditionError);
  EXPECT_THROW(lemma_many_bound(0.0, 1.0, 1.0, 3.0), ParameterError);
}

TEST(HighBound, Examples) {
  const LemmaHighBound b = lemma_high_bound(1.0, 1.0, 1.0, kE);
  EXPECT_NEAR(b.beta, kE / std::log(1.5), 1e-12);
  EXPECT_NEAR(b.beta, 6.70411, 1e-5);
  EXPECT_DOUBLE_EQ(b.alpha, kE);
  const double exponent = -kE / 2.0 + 5.0 * std::log(1.5) * kE + 1.0;
  EXPECT_NEAR(exponent, 5.151701, 1e-6);
  EXPECT_NEAR(b.value, 3.0 * std::exp(exponent), 1e-9);
  EXPECT_NEAR(b.value, 518.175, 1e-3);
  EXPECT_NEAR(lemma_high_bound(1.0, 1.0, 3.0, kE).value / std::exp(exponent), 5.0, 1e-12);
}

TEST(BonfBound, Examples) {
  const GammaSet g = gamma_first_primes(1'000'000, 10);
  BoundParams p = params_for(g);
  const LemmaBonfBound b = lemma_bonf_bound(p);
  EXPECT_DOUBLE_EQ(b.c, 1.0 / 16.0);
  EXPECT_NEAR(b.value, 5.0 * std::exp(-(6.0 * std::log(6.0)) / 16.0), 1e-12);
  // alpha = 1.5 -> gamma_n = 1.
  ASSERT_TRUE(b.gamma_n.has_value());
  EXPECT_EQ(*b.gamma_n, 1U);
  p.delta = 1.0 / 3.0;
  EXPECT_THROW(lemma_bonf_bound(p), PreconditionError);
}

TEST(BonfBound, LargestOdd) {
  EXPECT_EQ(largest_odd_at_most(5.7), 5U);
  EXPECT_EQ(largest_odd_at_most(6.0), 5U);
  EXPECT_EQ(largest_odd_at_most(1.0), 1U);
  EXPECT_FALSE(largest_odd_at_most(0.9).has_value());
}

TEST(TruncationRemainder, CaseSelectorAndTerms) {
  // beta = 6.7, |Gamma| = 10, alpha = 2.7: sqrt(67) > 2.7 -> else branch.
  EXPECT_GT(std::sqrt(6.7 * 10), 2.7);
  const GammaSet g = gamma_first_primes(1'000'000, 10);
  BoundParams p = params_for(g);
  p.delta = 0.3;
  const TruncationRemainder r = truncation_remainder_bound(1, p);
  const double rho = p.rho();
  const double alpha = 0.3 * rho;
  const double beta = beta_threshold(0.3, 1.0, rho);
  const double tau = to_double(g.tau());
  EXPECT_EQ(r.else_branch, std::sqrt(beta * 10) > alpha);
  const double stirling = std::pow(kE * tau, 1.0) * alpha * std::pow(2 * kE, 2 * tau);
  const double case_factor =
      r.else_branch ? alpha * std::pow(kE * kE * beta * 10 / (alpha * alpha), alpha) : alpha * std::exp(2 * alpha);
  EXPECT_NEAR(r.as_displayed, 3 * stirling + 4.0 * 100.0 / 1e6 * case_factor, 1e-9 * r.as_displayed);
  EXPECT_NEAR(r.as_derived, 6 * stirling + 4.0 * 100.0 / 1e6 * case_factor, 1e-9 * r.as_derived);
  EXPECT_THROW(truncation_remainder_bound(2, p), PreconditionError);
}

TEST(TruncationRemainder, TauOneFirstTerm) {
  // At large n the second term is negligible and the first, 3 (e tau) alpha (2e)^{2 tau} at gamma = 1, dominates.
  const GammaSet g(1'000'000'000'000ULL, {2, 3, 5});
  BoundParams p = params_for(g);
  const TruncationRemainder r = truncation_remainder_bound(1, p);
  const double tau = to_double(g.tau());
  const double alpha = p.delta * p.rho();
  const double first = 3.0 * kE * tau * alpha * std::pow(2 * kE, 2 * tau);
  EXPECT_GT(r.as_displayed, first);
  EXPECT_NEAR(r.as_displayed, first, 1e-3 * first);
}

TEST(Rough, Examples) {
  EXPECT_NEAR(16.0 / kE, 5.88607, 1e-5);
  EXPECT_NEAR(rough_bound(100, 0, 1.0), std::log(100.0) / 100.0, 1e-15);
  EXPECT_NEAR(rough_bound(100, 0, 1.0), 0.0460517, 1e-7);
  // Divergence with |Gamma| = ceil(log n).
  double previous = 0;
  for (std::uint64_t n = 10; n <= 10'000'000; n *= 10) {
    const double v = rough_bound(n, static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(n)))), 1.0);
    EXPECT_GT(v, previous);
    previous = v;
  }
  EXPECT_THROW(rough_bound(100, 1, 0.0), ParameterError);
}

TEST(Chernoff, Examples) {
  EXPECT_NEAR(chernoff_poisson_tail(1.0, 2.0), kE * kE / 4.0, 1e-15);
  EXPECT_NEAR(chernoff_poisson_tail(1.0, 2.0), 1.84726, 1e-5);
  EXPECT_NEAR(exact_poisson_series_tail(Rational(1), 2), kE - 2.0, 1e-15);
  EXPECT_NEAR(chernoff_poisson_tail(0.5, 5.0), std::pow(kE / 10.0, 5), 1e-18);
  EXPECT_NEAR(chernoff_poisson_tail(0.5, 5.0), 0.00148413, 1e-8);
  EXPECT_GE(chernoff_poisson_tail(0.5, 5.0), exact_poisson_series_tail(Rational(1, 2), 5));
  EXPECT_THROW(chernoff_poisson_tail(1.0, 1.0), PreconditionError);
}

TEST(Chernoff, DominatesExactTailOnGrid) {
  const auto start = std::chrono::steady_clock::now();
  for (const Rational& lambda : {Rational(1, 4), Rational(1, 2), Rational(1), Rational(2)}) {
    const double lam = to_double(lambda);
    const auto base = static_cast<std::uint64_t>(std::ceil(lam));
    for (std::uint64_t x = base + 1; x <= base + 10; ++x) {
      EXPECT_GE(chernoff_poisson_tail(lam, static_cast<double>(x)), exact_poisson_series_tail(lambda, x));
    }
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
}

TEST(Chernoff, SeriesTailAgainstDirectSum) {
  // Direct sum in long double for lambda = 2, x = 3.
  long double term = 8.0L / 6.0L;
  long double sum = 0;
  for (int k = 3; k < 80; ++k) {
    sum += term;
    term *= 2.0L / (k + 1);
  }
  EXPECT_NEAR(exact_poisson_series_tail(Rational(2), 3), static_cast<double>(sum), 1e-14);
}
