#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "kbv/rational.hpp"

namespace kbv {

struct SieveLimits {
  // Largest sieve range accepted; the output list for 4e9 is ~1.5 GB.
  std::uint64_t max_limit = 4'000'000'000ULL;
};

// Primes <= limit, ascending. Odd-only segmented sieve.
std::vector<std::uint64_t> sieve_primes(std::uint64_t limit, const SieveLimits& limits = {});

// Largest e with p^e | k. Requires k >= 1 and p >= 2.
unsigned valuation(std::uint64_t k, std::uint64_t p);

bool is_prime(std::uint64_t k);

// A finite set of distinct primes, all <= n, with tau = sum 1/p (exact) and
// rho = log n / log |Gamma| (natural logs, defined for |Gamma| >= 2).
class GammaSet {
 public:
  GammaSet() = default;
  enum class Range { at_most_n, any };

  // Validates primality, ordering and, unless `range` is any, primes <= n.
  // Primes above n are legal coordinates (their valuation is always 0) and
  // are accepted only on request.
  GammaSet(std::uint64_t n, std::vector<std::uint64_t> primes, Range range = Range::at_most_n);

  std::uint64_t n() const noexcept { return n_; }
  std::span<const std::uint64_t> primes() const noexcept { return primes_; }
  std::size_t size() const noexcept { return primes_.size(); }
  bool empty() const noexcept { return primes_.empty(); }
  bool contains(std::uint64_t p) const;

  const Rational& tau() const noexcept { return tau_; }
  std::optional<double> rho() const noexcept { return rho_; }

  // prod (1 - 1/q) over the set: the geometric mass of the all-zero vector.
  const Rational& zero_mass() const noexcept { return zero_mass_; }

  // |Gamma| < e^2. The lemma proofs use |Gamma| >= e^2; surfaced as a warning.
  bool small_gamma_warning() const noexcept;

  // Prefix with the first k primes, same n.
  GammaSet first(std::size_t k) const;

  nlohmann::json to_json() const;

 private:
  std::uint64_t n_ = 1;
  Range range_ = Range::at_most_n;
  std::vector<std::uint64_t> primes_;
  Rational tau_ = 0;
  Rational zero_mass_ = 1;
  std::optional<double> rho_;
};

// Primes p with lo <= p <= hi; requires 2 <= lo <= hi <= n.
GammaSet gamma_window(std::uint64_t n, double lo, double hi);

// The first k primes, all required to be <= n.
GammaSet gamma_first_primes(std::uint64_t n, std::size_t k);

// Primes <= n^{1/beta}. Empty when n^{1/beta} < 2.
GammaSet gamma_small_primes(std::uint64_t n, double beta);

// sum_{p <= n} 1/p - log log n. Requires n >= 3.
double mertens_gap(std::uint64_t n);

}  // namespace kbv
