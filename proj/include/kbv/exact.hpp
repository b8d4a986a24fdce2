#pragma once

// Exact joint law of the valuation vector (v_p; p in Gamma) under a law on
// [n], and its total variation distance to independent geometrics
// P[g_p = k] = p^{-k}(1 - 1/p).

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kbv/laws.hpp"
#include "kbv/primes.hpp"
#include "kbv/rational.hpp"

namespace kbv {

struct ExactLimits {
  std::size_t max_gamma = 16;
  std::uint64_t max_n = 10'000'000;
  unsigned jobs = 1;
};

// Finitely supported map prime -> multiplicity >= 1, sorted by prime. The
// empty vector is the all-zero configuration.
class MultiplicityVector {
 public:
  using Entry = std::pair<std::uint64_t, unsigned>;

  MultiplicityVector() = default;
  // Entries must have strictly increasing primes and multiplicities >= 1.
  explicit MultiplicityVector(std::vector<Entry> entries);

  // Factor a Gamma-smooth number over Gamma.
  static MultiplicityVector from_smooth(std::uint64_t smooth, const GammaSet& gamma);

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::vector<std::uint64_t> support() const;
  std::size_t support_size() const noexcept { return entries_.size(); }
  unsigned total() const noexcept;  // |m|
  BigInt radical() const;           // p_D
  BigInt value() const;             // p_D^m
  unsigned multiplicity(std::uint64_t p) const noexcept;
  bool empty() const noexcept { return entries_.empty(); }

  std::string to_string() const;  // "{}" or "{2:3,5:1}"

  friend auto operator<=>(const MultiplicityVector&, const MultiplicityVector&) = default;
  friend bool operator==(const MultiplicityVector&, const MultiplicityVector&) = default;

 private:
  std::vector<Entry> entries_;
};

// Law of v^n on Gamma: finite support listed in lexicographic order of the
// (prime, multiplicity) sequences.
class JointLaw {
 public:
  struct Atom {
    MultiplicityVector m;
    std::uint64_t smooth = 1;  // p_D^m
    Rational mass;
  };

  JointLaw(GammaSet gamma, std::vector<Atom> atoms);

  const GammaSet& gamma() const noexcept { return gamma_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  // Mass of the configuration with Gamma-part equal to `smooth`; 0 off support.
  Rational mass_of_smooth(std::uint64_t smooth) const;
  Rational mass(const MultiplicityVector& m) const;

 private:
  GammaSet gamma_;
  std::vector<Atom> atoms_;
  std::map<std::uint64_t, std::size_t> index_;
};

// Enumerates k in [n] and groups the weights by the Gamma-part of k.
JointLaw joint_v_law(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits = {});

// prod_{p in D} p^{-m_p}(1 - 1/p) prod_{q in Gamma \ D} (1 - 1/q).
Rational geometric_mass(const GammaSet& gamma, const MultiplicityVector& m);

// Same event through sum_{I subset Gamma} (-1)^{|I|} / (p_D^m p_I).
Rational geometric_alternating_sum(const GammaSet& gamma, const MultiplicityVector& m);

// d_TV(v^n, g^n): half the l1 distance over the support of v^n plus the
// geometric mass off that support.
Rational exact_tv(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits = {});
Rational exact_tv(const JointLaw& joint);

// Double-precision counterpart with compensated summation.
double float_tv(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits = {});

// P[A(D, m)]: v_p = m_p on D and v_q = 0 on Gamma \ D, by enumerating the
// multiples of p_D^m. D must equal supp(m) and lie in Gamma.
Rational event_prob_A(const LawSpec& law, const GammaSet& gamma, std::span<const std::uint64_t> D,
                      const MultiplicityVector& m);

// P[A~(D, m)], the geometric counterpart; checked against the alternating sum
// whenever |Gamma| <= 16.
Rational event_prob_A_tilde(const GammaSet& gamma, std::span<const std::uint64_t> D, const MultiplicityVector& m);

// The three pieces of 2 d_TV: many distinct primes (|D| >= alpha), high
// multiplicity (|D| < alpha, |m| >= beta), and the remainder.
struct PartitionSums {
  double alpha = 0;
  double beta = 0;
  Rational s_many;
  Rational s_high;
  Rational s_small;
  Rational total() const { return s_many + s_high + s_small; }
};

PartitionSums partitioned_tv(const JointLaw& joint, double alpha, double beta);
PartitionSums partitioned_tv(const LawSpec& law, const GammaSet& gamma, double alpha, double beta,
                             const ExactLimits& limits = {});

// Truncated inclusion-exclusion for P[A(D, m)] and P[A~(D, m)] at odd gamma.
struct BonferroniBounds {
  unsigned truncation = 1;
  Rational lower;      // sum over |I| <= gamma of (-1)^{|I|} P[p_D^m p_I | J_n]
  Rational upper;      // same over |I| <= gamma + 1
  Rational geo_lower;  // sum over |I| <= gamma of (-1)^{|I|} / (p_D^m p_I)
  Rational geo_upper;
};

// Evaluates the level sums once per (D, m) so every odd truncation is cheap.
class BonferroniEvaluator {
 public:
  BonferroniEvaluator(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits = {});

  // Signed level sums c_j = (-1)^j sum_{|I| = j} P[p_D^m p_I | J_n], j = 0..|Gamma|.
  std::vector<Rational> level_sums(const MultiplicityVector& m) const;
  // Same with 1/(p_D^m p_I).
  std::vector<Rational> geometric_level_sums(const MultiplicityVector& m) const;

  BonferroniBounds bounds(const MultiplicityVector& m, unsigned truncation) const;

  const GammaSet& gamma() const noexcept { return *gamma_; }

 private:
  const LawSpec* law_;
  const GammaSet* gamma_;
  DivisorSums sums_;
  std::vector<Rational> elementary_;  // e_j of {1/q : q in Gamma}
};

BonferroniBounds bonferroni_partial_sums(const LawSpec& law, const GammaSet& gamma, std::span<const std::uint64_t> D,
                                         const MultiplicityVector& m, unsigned truncation,
                                         const ExactLimits& limits = {});

// Every m supported in Gamma with |m| <= max_total, in lexicographic order.
std::vector<MultiplicityVector> enumerate_multiplicities(const GammaSet& gamma, unsigned max_total);

}  // namespace kbv
