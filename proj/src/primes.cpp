#include "kbv/primes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kbv/error.hpp"
#include "kbv/kernels.hpp"

namespace kbv {
namespace {

constexpr std::uint64_t kSegmentOdds = 1U << 18;

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::vector<std::uint64_t> small_sieve(std::uint64_t limit) {
  std::vector<std::uint64_t> primes;
  if (limit < 2) return primes;
  std::vector<bool> composite(limit + 1, false);
  for (std::uint64_t i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = true;
  }
  return primes;
}

std::uint64_t floor_root(std::uint64_t n, double beta) {
  const double approx = std::exp(std::log(static_cast<double>(n)) / beta);
  auto h = static_cast<std::uint64_t>(std::floor(approx + 1e-9));
  while (h >= 2 && std::pow(static_cast<double>(h), beta) > static_cast<double>(n) * (1 + 1e-12)) --h;
  return h;
}

}  // namespace

std::vector<std::uint64_t> sieve_primes(std::uint64_t limit, const SieveLimits& limits) {
  if (limit > limits.max_limit) {
    throw ResourceError("primes", "sieve limit " + std::to_string(limit) + " exceeds the configured maximum " +
                                      std::to_string(limits.max_limit));
  }
  std::vector<std::uint64_t> primes;
  if (limit < 2) return primes;
  primes.push_back(2);
  if (limit < 3) return primes;

  const auto base = small_sieve(isqrt(limit));
  // Segment s covers the odd numbers 2*i + 1 for i in [lo, hi).
  const std::uint64_t odd_count = (limit - 1) / 2 + 1;  // odds in [1, limit]
  std::vector<char> composite(kSegmentOdds);
  for (std::uint64_t lo = 1; lo < odd_count; lo += kSegmentOdds) {
    const std::uint64_t hi = std::min(odd_count, lo + kSegmentOdds);
    std::fill(composite.begin(), composite.end(), 0);
    const std::uint64_t first_value = 2 * lo + 1;
    const std::uint64_t last_value = 2 * (hi - 1) + 1;
    for (std::uint64_t p : base) {
      if (p == 2) continue;
      if (p * p > last_value) break;
      std::uint64_t start = std::max(p * p, (first_value + p - 1) / p * p);
      if (start % 2 == 0) start += p;
      for (std::uint64_t v = start; v <= last_value; v += 2 * p) composite[(v - 1) / 2 - lo] = 1;
    }
    for (std::uint64_t i = lo; i < hi; ++i) {
      if (!composite[i - lo]) primes.push_back(2 * i + 1);
    }
  }
  return primes;
}

unsigned valuation(std::uint64_t k, std::uint64_t p) {
  if (k == 0 || p < 2) throw PreconditionError("primes", "valuation requires k >= 1 and p >= 2");
  unsigned e = 0;
  while (k % p == 0) {
    k /= p;
    ++e;
  }
  return e;
}

bool is_prime(std::uint64_t k) {
  if (k < 2) return false;
  if (k % 2 == 0) return k == 2;
  for (std::uint64_t d = 3; d * d <= k; d += 2) {
    if (k % d == 0) return false;
  }
  return true;
}

GammaSet::GammaSet(std::uint64_t n, std::vector<std::uint64_t> primes, Range range)
    : n_(n), range_(range), primes_(std::move(primes)) {
  if (n_ == 0) throw PreconditionError("primes", "Gamma requires n >= 1");
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    const std::uint64_t p = primes_[i];
    if (!is_prime(p)) throw PreconditionError("primes", std::to_string(p) + " is not prime");
    if (range_ == Range::at_most_n && p > n_) throw PreconditionError("primes", "prime " + std::to_string(p) + " exceeds n = " + std::to_string(n_));
    if (i > 0 && primes_[i - 1] >= p) throw PreconditionError("primes", "Gamma must be strictly increasing");
  }
  for (std::uint64_t p : primes_) {
    tau_ += make_rational(1, p);
    zero_mass_ *= make_rational(p - 1, p);
  }
  if (primes_.size() >= 2) {
    rho_ = std::log(static_cast<double>(n_)) / std::log(static_cast<double>(primes_.size()));
  }
}

bool GammaSet::contains(std::uint64_t p) const { return std::binary_search(primes_.begin(), primes_.end(), p); }

bool GammaSet::small_gamma_warning() const noexcept {
  return static_cast<double>(primes_.size()) < std::exp(2.0);
}

GammaSet GammaSet::first(std::size_t k) const {
  const std::size_t take = std::min(k, primes_.size());
  return GammaSet(n_, std::vector<std::uint64_t>(primes_.begin(), primes_.begin() + static_cast<std::ptrdiff_t>(take)),
                  range_);
}

nlohmann::json GammaSet::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["primes"] = primes_;
  j["tau"] = to_fraction_string(tau_);
  if (rho_) {
    j["rho"] = *rho_;
  } else {
    j["rho"] = nullptr;
  }
  return j;
}

GammaSet gamma_window(std::uint64_t n, double lo, double hi) {
  if (!(lo >= 2.0) || !(lo <= hi) || !(hi <= static_cast<double>(n))) {
    throw PreconditionError("primes", "window requires 2 <= lo <= hi <= n");
  }
  const auto lo_int = static_cast<std::uint64_t>(std::ceil(lo));
  const auto hi_int = static_cast<std::uint64_t>(std::floor(hi));
  std::vector<std::uint64_t> selected;
  for (std::uint64_t p : sieve_primes(hi_int)) {
    if (p >= lo_int) selected.push_back(p);
  }
  return GammaSet(n, std::move(selected));
}

GammaSet gamma_first_primes(std::uint64_t n, std::size_t k) {
  std::vector<std::uint64_t> selected;
  std::uint64_t limit = 16;
  while (selected.size() < k) {
    selected = sieve_primes(limit);
    limit *= 2;
  }
  selected.resize(k);
  return GammaSet(n, std::move(selected));
}

GammaSet gamma_small_primes(std::uint64_t n, double beta) {
  if (!(beta > 0)) throw ParameterError("primes", "beta must be positive");
  const std::uint64_t hi = std::min<std::uint64_t>(floor_root(n, beta), n);
  if (hi < 2) return GammaSet(n, {});
  return GammaSet(n, sieve_primes(hi));
}

double mertens_gap(std::uint64_t n) {
  if (n < 3) throw PreconditionError("primes", "Mertens gap requires n >= 3");
  const auto primes = sieve_primes(n);
  std::vector<double> reciprocals(primes.size());
  std::transform(primes.begin(), primes.end(), reciprocals.begin(),
                 [](std::uint64_t p) { return 1.0 / static_cast<double>(p); });
  return kernels::compensated_sum(reciprocals) - std::log(std::log(static_cast<double>(n)));
}

}  // namespace kbv
