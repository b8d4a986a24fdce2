#include "kbv/exact.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <thread>
#include <unordered_map>

#include "kbv/error.hpp"
#include "kbv/kernels.hpp"

namespace kbv {
namespace {

constexpr std::size_t kBlock = 1U << 14;
constexpr std::size_t kMaxSubsetEnumeration = 24;

void check_supported(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits) {
  if (gamma.n() != law.n()) {
    throw PreconditionError("exact", "Gamma was built for n = " + std::to_string(gamma.n()) + " but the law has n = " +
                                         std::to_string(law.n()));
  }
  if (gamma.size() > limits.max_gamma) {
    throw ResourceError("exact", "|Gamma| = " + std::to_string(gamma.size()) + " exceeds the exact-mode limit " +
                                     std::to_string(limits.max_gamma) + " (max_gamma)");
  }
  if (law.n() > limits.max_n) {
    throw ResourceError("exact", "n = " + std::to_string(law.n()) + " exceeds the exact-mode limit " +
                                     std::to_string(limits.max_n) + " (max_n)");
  }
  if (law.n() > UINT32_MAX) throw ResourceError("exact", "n exceeds the 32-bit enumeration range");
}

void check_support_matches(const GammaSet& gamma, std::span<const std::uint64_t> D, const MultiplicityVector& m) {
  const auto support = m.support();
  if (!std::equal(support.begin(), support.end(), D.begin(), D.end())) {
    throw PreconditionError("exact", "D must equal supp(m)");
  }
  for (std::uint64_t p : D) {
    if (!gamma.contains(p)) throw PreconditionError("exact", "prime " + std::to_string(p) + " of D is not in Gamma");
  }
}

// Weight grouped by Gamma-part over k in [first, last].
template <typename Weight>
using WeightMap = std::unordered_map<std::uint32_t, Weight>;

template <typename Weight, typename WeightOf>
WeightMap<Weight> accumulate_range(std::uint64_t first, std::uint64_t last, std::span<const kernels::PrimeDivisor> divisors,
                                   WeightOf weight_of) {
  WeightMap<Weight> acc;
  std::vector<std::uint32_t> ks(kBlock);
  std::vector<std::uint32_t> parts(kBlock);
  for (std::uint64_t lo = first; lo <= last; lo += kBlock) {
    const std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(kBlock, last - lo + 1));
    for (std::size_t i = 0; i < len; ++i) ks[i] = static_cast<std::uint32_t>(lo + i);
    kernels::smooth_part(std::span(ks.data(), len), divisors, std::span(parts.data(), len));
    for (std::size_t i = 0; i < len; ++i) weight_of(acc[parts[i]], lo + i);
  }
  return acc;
}

// Runs accumulate_range over `jobs` contiguous chunks and merges the maps.
template <typename Weight, typename WeightOf>
std::vector<std::pair<std::uint32_t, Weight>> accumulate(std::uint64_t n, const GammaSet& gamma, unsigned jobs,
                                                         WeightOf weight_of) {
  const auto divisors = kernels::make_divisors(gamma.primes());
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::uint64_t>(1, n / kBlock))));
  std::vector<WeightMap<Weight>> partial(jobs);
  {
    std::vector<std::jthread> workers;
    const std::uint64_t chunk = (n + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::uint64_t first = 1 + j * chunk;
      const std::uint64_t last = std::min(n, first + chunk - 1);
      if (first > last) continue;
      workers.emplace_back([&, j, first, last] {
        partial[j] = accumulate_range<Weight>(first, last, divisors, weight_of);
      });
    }
  }
  std::map<std::uint32_t, Weight> merged;
  for (auto& part : partial) {
    for (auto& [key, w] : part) merged[key] += w;
  }
  return {merged.begin(), merged.end()};
}

std::vector<std::pair<std::uint32_t, BigInt>> accumulate_weights(const LawSpec& law, const GammaSet& gamma,
                                                                 unsigned jobs) {
  std::vector<std::pair<std::uint32_t, BigInt>> out;
  if (law.unit_weights()) {
    auto counts = accumulate<std::uint64_t>(law.n(), gamma, jobs, [](std::uint64_t& acc, std::uint64_t) { ++acc; });
    out.reserve(counts.size());
    for (auto& [key, c] : counts) out.emplace_back(key, to_big(c));
  } else {
    const auto& w = law.weights();
    out = accumulate<BigInt>(law.n(), gamma, jobs, [&w](BigInt& acc, std::uint64_t k) { acc += w[k - 1]; });
  }
  return out;
}

// Poisson-binomial law of the number of nonzero coordinates of g^n.
std::vector<Rational> support_size_law(const GammaSet& gamma) {
  std::vector<Rational> dist{Rational(1)};
  for (std::uint64_t q : gamma.primes()) {
    const Rational hit = make_rational(1, q);
    const Rational miss = 1 - hit;
    std::vector<Rational> next(dist.size() + 1);
    for (std::size_t j = 0; j < dist.size(); ++j) {
      next[j] += dist[j] * miss;
      next[j + 1] += dist[j] * hit;
    }
    dist = std::move(next);
  }
  return dist;
}

// P[sum_{p in D} ghat_p >= beta] with ghat_p shifted geometric on {1, 2, ...}:
// P[ghat_p = k] = p^{-(k-1)} (1 - 1/p). Exact: one minus the truncated pmf.
Rational shifted_sum_tail(const std::vector<std::uint64_t>& D, double beta) {
  if (std::isinf(beta) && beta > 0) return 0;
  if (beta <= static_cast<double>(D.size())) return 1;
  const auto bound = static_cast<std::size_t>(std::ceil(beta));  // |m| >= beta <=> |m| >= bound
  std::vector<Rational> dist(bound);
  dist[0] = 1;
  for (std::uint64_t p : D) {
    const Rational inv = make_rational(1, p);
    std::vector<Rational> next(bound);
    for (std::size_t s = 0; s < bound; ++s) {
      if (sgn(dist[s]) == 0) continue;
      Rational pk = 1 - inv;  // P[ghat = 1]
      for (std::size_t k = 1; s + k < bound; ++k) {
        next[s + k] += dist[s] * pk;
        pk *= inv;
      }
    }
    dist = std::move(next);
  }
  Rational below = 0;
  for (const auto& d : dist) below += d;
  return 1 - below;
}

}  // namespace

MultiplicityVector::MultiplicityVector(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].second == 0) throw PreconditionError("exact", "stored multiplicities must be >= 1");
    if (i > 0 && entries_[i - 1].first >= entries_[i].first) {
      throw PreconditionError("exact", "multiplicity vector primes must be strictly increasing");
    }
  }
}

MultiplicityVector MultiplicityVector::from_smooth(std::uint64_t smooth, const GammaSet& gamma) {
  std::vector<Entry> entries;
  for (std::uint64_t p : gamma.primes()) {
    unsigned e = 0;
    while (smooth % p == 0) {
      smooth /= p;
      ++e;
    }
    if (e > 0) entries.emplace_back(p, e);
  }
  if (smooth != 1) throw PreconditionError("exact", "value is not Gamma-smooth");
  return MultiplicityVector(std::move(entries));
}

std::vector<std::uint64_t> MultiplicityVector::support() const {
  std::vector<std::uint64_t> out;
  out.reserve(entries_.size());
  for (const auto& [p, e] : entries_) out.push_back(p);
  return out;
}

unsigned MultiplicityVector::total() const noexcept {
  unsigned s = 0;
  for (const auto& [p, e] : entries_) s += e;
  return s;
}

BigInt MultiplicityVector::radical() const {
  BigInt r = 1;
  for (const auto& [p, e] : entries_) r *= to_big(p);
  return r;
}

BigInt MultiplicityVector::value() const {
  BigInt r = 1;
  for (const auto& [p, e] : entries_) {
    BigInt pe;
    mpz_pow_ui(pe.get_mpz_t(), to_big(p).get_mpz_t(), e);
    r *= pe;
  }
  return r;
}

unsigned MultiplicityVector::multiplicity(std::uint64_t p) const noexcept {
  for (const auto& [q, e] : entries_) {
    if (q == p) return e;
  }
  return 0;
}

std::string MultiplicityVector::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(entries_[i].first) + ":" + std::to_string(entries_[i].second);
  }
  return s + "}";
}

JointLaw::JointLaw(GammaSet gamma, std::vector<Atom> atoms) : gamma_(std::move(gamma)), atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.m < b.m; });
  for (std::size_t i = 0; i < atoms_.size(); ++i) index_.emplace(atoms_[i].smooth, i);
}

Rational JointLaw::mass_of_smooth(std::uint64_t smooth) const {
  const auto it = index_.find(smooth);
  return it == index_.end() ? Rational(0) : atoms_[it->second].mass;
}

Rational JointLaw::mass(const MultiplicityVector& m) const {
  const BigInt v = m.value();
  if (v > to_big(gamma_.n())) return 0;
  return mass_of_smooth(v.get_ui());
}

JointLaw joint_v_law(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits) {
  check_supported(law, gamma, limits);
  const auto weights = accumulate_weights(law, gamma, limits.jobs);
  std::vector<JointLaw::Atom> atoms;
  atoms.reserve(weights.size());
  for (const auto& [smooth, w] : weights) {
    atoms.push_back({MultiplicityVector::from_smooth(smooth, gamma), smooth, make_rational(w, law.total_weight())});
  }
  return JointLaw(gamma, std::move(atoms));
}

Rational geometric_mass(const GammaSet& gamma, const MultiplicityVector& m) {
  for (const auto& [p, e] : m.entries()) {
    if (!gamma.contains(p)) throw PreconditionError("exact", "supp(m) must lie in Gamma");
  }
  return gamma.zero_mass() / Rational(m.value());
}

Rational geometric_alternating_sum(const GammaSet& gamma, const MultiplicityVector& m) {
  if (gamma.size() > kMaxSubsetEnumeration) {
    throw ResourceError("exact", "alternating sum over 2^|Gamma| subsets is limited to |Gamma| <= 24");
  }
  const BigInt base = m.value();
  const auto primes = gamma.primes();
  Rational acc = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << primes.size()); ++mask) {
    BigInt den = base;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      if (mask & (std::uint64_t{1} << i)) den *= to_big(primes[i]);
    }
    const Rational term(BigInt(1), den);
    if (std::popcount(mask) % 2 == 0) {
      acc += term;
    } else {
      acc -= term;
    }
  }
  acc.canonicalize();
  return acc;
}

Rational exact_tv(const JointLaw& joint) {
  const Rational& zero_mass = joint.gamma().zero_mass();
  Rational abs_sum = 0;
  Rational geo_on_support = 0;
  for (const auto& atom : joint.atoms()) {
    const Rational geo = zero_mass / Rational(to_big(atom.smooth));
    abs_sum += abs(atom.mass - geo);
    geo_on_support += geo;
  }
  return (abs_sum + (1 - geo_on_support)) / 2;
}

Rational exact_tv(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits) {
  return exact_tv(joint_v_law(law, gamma, limits));
}

double float_tv(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits) {
  check_supported(law, gamma, limits);
  const auto weights = accumulate_weights(law, gamma, limits.jobs);
  const double total = to_double(Rational(law.total_weight()));
  const double zero_mass = to_double(gamma.zero_mass());
  std::vector<double> v_mass(weights.size());
  std::vector<double> g_mass(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    v_mass[i] = to_double(Rational(weights[i].second)) / total;
    g_mass[i] = zero_mass / static_cast<double>(weights[i].first);
  }
  const double abs_sum = kernels::abs_diff_sum(v_mass, g_mass);
  const double geo_on_support = kernels::compensated_sum(g_mass);
  return 0.5 * (abs_sum + (1.0 - geo_on_support));
}

Rational event_prob_A(const LawSpec& law, const GammaSet& gamma, std::span<const std::uint64_t> D,
                      const MultiplicityVector& m) {
  if (gamma.n() != law.n()) throw PreconditionError("exact", "Gamma and law disagree on n");
  check_support_matches(gamma, D, m);
  const BigInt big_value = m.value();
  if (big_value > to_big(law.n())) return 0;
  const std::uint64_t value = big_value.get_ui();
  BigInt acc = 0;
  const auto primes = gamma.primes();
  for (std::uint64_t j = 1; j <= law.n() / value; ++j) {
    const bool coprime = std::none_of(primes.begin(), primes.end(), [j](std::uint64_t q) { return j % q == 0; });
    if (coprime) acc += law.weight(value * j);
  }
  return make_rational(acc, law.total_weight());
}

Rational event_prob_A_tilde(const GammaSet& gamma, std::span<const std::uint64_t> D, const MultiplicityVector& m) {
  check_support_matches(gamma, D, m);
  Rational closed = geometric_mass(gamma, m);
  if (gamma.size() <= 16 && closed != geometric_alternating_sum(gamma, m)) {
    throw InvariantViolation("exact", "geometric event probability disagrees with its alternating-sum form for m = " +
                                          m.to_string());
  }
  return closed;
}

PartitionSums partitioned_tv(const JointLaw& joint, double alpha, double beta) {
  if (!(alpha >= 0) || !(beta >= 0)) throw PreconditionError("exact", "alpha and beta must be >= 0");
  const GammaSet& gamma = joint.gamma();
  if (gamma.size() > kMaxSubsetEnumeration) {
    throw ResourceError("exact", "partitioned sums enumerate subsets of Gamma; |Gamma| <= 24 required");
  }
  PartitionSums out;
  out.alpha = alpha;
  out.beta = beta;
  auto region = [&](std::size_t support, unsigned total) {
    if (static_cast<double>(support) >= alpha) return 0;
    if (static_cast<double>(total) >= beta) return 1;
    return 2;
  };

  std::array<Rational, 3> abs_sum{0, 0, 0};
  std::array<Rational, 3> geo_on_support{0, 0, 0};
  const Rational& zero_mass = gamma.zero_mass();
  for (const auto& atom : joint.atoms()) {
    const Rational geo = zero_mass / Rational(to_big(atom.smooth));
    const int r = region(atom.m.support_size(), atom.m.total());
    abs_sum[r] += abs(atom.mass - geo);
    geo_on_support[r] += geo;
  }

  // Geometric mass of each region over the whole (infinite) space.
  std::array<Rational, 3> geo_region{0, 0, 0};
  const auto size_law = support_size_law(gamma);
  for (std::size_t j = 0; j < size_law.size(); ++j) {
    if (static_cast<double>(j) >= alpha) geo_region[0] += size_law[j];
  }
  const auto primes = gamma.primes();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << primes.size()); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (static_cast<double>(size) >= alpha) continue;
    std::vector<std::uint64_t> D;
    BigInt den = 1;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      if (mask & (std::uint64_t{1} << i)) {
        D.push_back(primes[i]);
        den *= to_big(primes[i] - 1);
      }
    }
    // P[supp g = D] = prod_{q} (1 - 1/q) / prod_{p in D} (p - 1).
    const Rational tail = shifted_sum_tail(D, beta);
    if (sgn(tail) != 0) geo_region[1] += zero_mass / Rational(den) * tail;
  }
  geo_region[2] = 1 - geo_region[0] - geo_region[1];

  out.s_many = abs_sum[0] + geo_region[0] - geo_on_support[0];
  out.s_high = abs_sum[1] + geo_region[1] - geo_on_support[1];
  out.s_small = abs_sum[2] + geo_region[2] - geo_on_support[2];
  return out;
}

PartitionSums partitioned_tv(const LawSpec& law, const GammaSet& gamma, double alpha, double beta,
                             const ExactLimits& limits) {
  return partitioned_tv(joint_v_law(law, gamma, limits), alpha, beta);
}

BonferroniEvaluator::BonferroniEvaluator(const LawSpec& law, const GammaSet& gamma, const ExactLimits& limits)
    : law_(&law), gamma_(&gamma), sums_(law) {
  if (gamma.n() != law.n()) throw PreconditionError("exact", "Gamma and law disagree on n");
  if (gamma.size() > limits.max_gamma) {
    throw ResourceError("exact", "|Gamma| = " + std::to_string(gamma.size()) + " exceeds the exact-mode limit " +
                                     std::to_string(limits.max_gamma) + " (max_gamma)");
  }
  elementary_.assign(gamma.size() + 1, Rational(0));
  elementary_[0] = 1;
  for (std::uint64_t q : gamma.primes()) {
    const Rational inv = make_rational(1, q);
    for (std::size_t j = elementary_.size() - 1; j >= 1; --j) elementary_[j] += elementary_[j - 1] * inv;
  }
}

std::vector<Rational> BonferroniEvaluator::level_sums(const MultiplicityVector& m) const {
  const auto primes = gamma_->primes();
  const BigInt n = to_big(law_->n());
  std::vector<BigInt> signed_sums(primes.size() + 1, BigInt(0));
  // Depth-first over subsets I; products beyond n contribute nothing and only
  // grow as primes are added, so those branches are cut.
  std::function<void(std::size_t, const BigInt&, std::size_t)> visit = [&](std::size_t next, const BigInt& a,
                                                                            std::size_t size) {
    if (a > n) return;
    signed_sums[size] += sums_.sum(a);
    for (std::size_t i = next; i < primes.size(); ++i) visit(i + 1, a * to_big(primes[i]), size + 1);
  };
  visit(0, m.value(), 0);
  std::vector<Rational> out(signed_sums.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = make_rational(j % 2 == 0 ? signed_sums[j] : BigInt(-signed_sums[j]), law_->total_weight());
  }
  return out;
}

std::vector<Rational> BonferroniEvaluator::geometric_level_sums(const MultiplicityVector& m) const {
  const Rational inv_value(BigInt(1), m.value());
  std::vector<Rational> out(elementary_.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = elementary_[j] * inv_value;
    if (j % 2 == 1) out[j] = -out[j];
  }
  return out;
}

BonferroniBounds BonferroniEvaluator::bounds(const MultiplicityVector& m, unsigned truncation) const {
  if (truncation % 2 == 0 || truncation < 1 || truncation > gamma_->size()) {
    throw PreconditionError("exact", "truncation must be an odd integer in [1, |Gamma|]");
  }
  const auto levels = level_sums(m);
  const auto geo_levels = geometric_level_sums(m);
  BonferroniBounds b;
  b.truncation = truncation;
  b.lower = 0;
  b.geo_lower = 0;
  for (std::size_t j = 0; j <= truncation; ++j) {
    b.lower += levels[j];
    b.geo_lower += geo_levels[j];
  }
  b.upper = b.lower;
  b.geo_upper = b.geo_lower;
  if (truncation + 1 < levels.size()) {
    b.upper += levels[truncation + 1];
    b.geo_upper += geo_levels[truncation + 1];
  }
  return b;
}

BonferroniBounds bonferroni_partial_sums(const LawSpec& law, const GammaSet& gamma, std::span<const std::uint64_t> D,
                                         const MultiplicityVector& m, unsigned truncation, const ExactLimits& limits) {
  check_support_matches(gamma, D, m);
  return BonferroniEvaluator(law, gamma, limits).bounds(m, truncation);
}

std::vector<MultiplicityVector> enumerate_multiplicities(const GammaSet& gamma, unsigned max_total) {
  std::vector<MultiplicityVector> out;
  const auto primes = gamma.primes();
  std::vector<MultiplicityVector::Entry> current;
  std::function<void(std::size_t, unsigned)> visit = [&](std::size_t next, unsigned remaining) {
    out.emplace_back(current);
    for (std::size_t i = next; i < primes.size(); ++i) {
      for (unsigned e = 1; e <= remaining; ++e) {
        current.emplace_back(primes[i], e);
        visit(i + 1, remaining - e);
        current.pop_back();
      }
    }
  };
  visit(0, max_total);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kbv
