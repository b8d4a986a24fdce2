#include "kbv/apps.hpp"

#include <mpfr.h>

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "kbv/bounds.hpp"
#include "kbv/kernels.hpp"

namespace kbv {
namespace {

constexpr std::uint64_t kOmegaBlock = 1U << 16;
constexpr unsigned kMaxOmega = 64;
constexpr double kPoissonTailTarget = 1e-30;

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// omega(k) for k in [lo, lo + len), dividing out every prime <= sqrt(n).
void omega_block(std::uint64_t lo, std::size_t len, std::span<const std::uint64_t> small_primes,
                 std::vector<std::uint32_t>& residual, std::vector<std::uint8_t>& count) {
  for (std::size_t i = 0; i < len; ++i) {
    residual[i] = static_cast<std::uint32_t>(lo + i);
    count[i] = 0;
  }
  const std::uint64_t hi = lo + len;
  for (std::uint64_t p : small_primes) {
    for (std::uint64_t k = (lo + p - 1) / p * p; k < hi; k += p) {
      const std::size_t i = k - lo;
      ++count[i];
      do residual[i] /= static_cast<std::uint32_t>(p);
      while (residual[i] % p == 0);
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (residual[i] > 1) ++count[i];
  }
}

template <typename Weight>
using Histogram = std::vector<Weight>;

// Accumulates weight_of(k) into the bucket count_of(k) over [1, n] in `jobs`
// contiguous chunks, merged in chunk order.
template <typename Weight, typename Fill, typename WeightOf>
Histogram<Weight> histogram(std::uint64_t n, unsigned jobs, Fill fill, WeightOf weight_of) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::uint64_t>(1, n / kOmegaBlock))));
  std::vector<Histogram<Weight>> partial(jobs, Histogram<Weight>(kMaxOmega + 1));
  {
    std::vector<std::jthread> workers;
    const std::uint64_t chunk = (n + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::uint64_t first = 1 + j * chunk;
      const std::uint64_t last = std::min(n, first + chunk - 1);
      if (first > last) continue;
      workers.emplace_back([&, j, first, last] {
        std::vector<std::uint32_t> scratch(kOmegaBlock);
        std::vector<std::uint8_t> count(kOmegaBlock);
        auto& hist = partial[j];
        for (std::uint64_t lo = first; lo <= last; lo += kOmegaBlock) {
          const auto len = static_cast<std::size_t>(std::min<std::uint64_t>(kOmegaBlock, last - lo + 1));
          fill(lo, len, scratch, count);
          for (std::size_t i = 0; i < len; ++i) weight_of(hist[count[i]], lo + i);
        }
      });
    }
  }
  Histogram<Weight> merged(kMaxOmega + 1);
  for (const auto& part : partial) {
    for (std::size_t j = 0; j <= kMaxOmega; ++j) merged[j] += part[j];
  }
  return merged;
}

template <typename Fill>
std::vector<BigInt> omega_weights(const LawSpec& law, unsigned jobs, Fill fill) {
  std::vector<BigInt> out;
  if (law.unit_weights()) {
    auto counts = histogram<std::uint64_t>(law.n(), jobs, fill, [](std::uint64_t& acc, std::uint64_t) { ++acc; });
    for (auto c : counts) out.push_back(to_big(c));
  } else {
    const auto& w = law.weights();
    out = histogram<BigInt>(law.n(), jobs, fill, [&w](BigInt& acc, std::uint64_t k) { acc += w[k - 1]; });
  }
  while (out.size() > 1 && sgn(out.back()) == 0) out.pop_back();
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
// Antiderivative of Phi vanishing at -infinity.
double big_g(double z) { return z * normal_cdf(z) + normal_pdf(z); }
// int_a^b Phi and int_a^b (1 - Phi); infinite ends allowed on the decaying side.
double int_phi(double a, double b) { return (std::isinf(b) ? 0.0 : big_g(b)) - (std::isinf(a) ? 0.0 : big_g(a)); }
double int_upper(double a, double b) { return (std::isinf(a) ? 0.0 : big_g(-a)) - (std::isinf(b) ? 0.0 : big_g(-b)); }

// int_a^b |F - Phi| over a finite step, F = 1 - S.
double step_integral(double a, double b, double F, double S) {
  if (F <= 0.0) return int_phi(a, b);
  if (S <= 0.0) return int_upper(a, b);
  const double cross = F <= 0.5 ? -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * F)
                                : std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * S);
  const double m = std::clamp(cross, a, b);
  double left = 0.0;
  double right = 0.0;
  if (F <= 0.5) {
    if (m > a) left = F * (m - a) - int_phi(a, m);
    if (b > m) right = int_phi(m, b) - F * (b - m);
  } else {
    if (m > a) left = int_upper(a, m) - S * (m - a);
    if (b > m) right = S * (b - m) - int_upper(m, b);
  }
  return std::max(0.0, left) + std::max(0.0, right);
}

// W1 against N(0, 1) given support points z and the cdf F / survival S just
// right of each point.
double w1_standard(const std::vector<double>& z, const std::vector<double>& F, const std::vector<double>& S) {
  const double inf = std::numeric_limits<double>::infinity();
  if (z.empty()) throw PreconditionError("apps", "W1 needs a nonempty distribution");
  double total = int_phi(-inf, z.front());
  for (std::size_t i = 0; i + 1 < z.size(); ++i) total += step_integral(z[i], z[i + 1], F[i], S[i]);
  total += int_upper(z.back(), inf);
  return total;
}

// Poisson pmf evaluation state at 256 bits.
class Mpfr {
 public:
  Mpfr() { mpfr_init2(v_, 256); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

std::vector<Rational> poisson_binomial_pmf(std::span<const std::uint64_t> primes) {
  std::vector<Rational> dist{Rational(1)};
  for (std::uint64_t p : primes) {
    const Rational hit = make_rational(1, p);
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

}  // namespace

nlohmann::json OmegaDistribution::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& q : masses) m.push_back(to_fraction_string(q));
  nlohmann::json j{{"n", n}, {"law", law}, {"masses", m}, {"mean", to_fraction_string(mean)},
                   {"variance", to_fraction_string(variance)}};
  j["window"] = window ? nlohmann::json{{"lo", window->lo}, {"hi", window->hi}} : nlohmann::json(nullptr);
  return j;
}

OmegaDistribution omega_distribution(const LawSpec& law, std::optional<PrimeWindow> window, const ExactLimits& limits) {
  const std::uint64_t n = law.n();
  if (n > limits.max_n) {
    throw ResourceError("apps", "n = " + std::to_string(n) + " exceeds the exact-mode limit " +
                                    std::to_string(limits.max_n) + " (max_n)");
  }
  if (n > UINT32_MAX) throw ResourceError("apps", "n exceeds the 32-bit sieve range");

  std::vector<BigInt> weights;
  if (window) {
    if (!(window->lo <= window->hi)) throw PreconditionError("apps", "prime window requires lo <= hi");
    const double hi = std::min(window->hi, static_cast<double>(n));
    std::vector<std::uint64_t> primes;
    if (hi >= 2.0) {
      for (std::uint64_t p : sieve_primes(static_cast<std::uint64_t>(std::floor(hi)))) {
        if (static_cast<double>(p) >= window->lo) primes.push_back(p);
      }
    }
    if (primes.size() > kMaxOmega) throw ResourceError("apps", "prime window too large for the count kernel");
    const auto divisors = kernels::make_divisors(primes);
    weights = omega_weights(law, limits.jobs,
                            [&](std::uint64_t lo, std::size_t len, std::vector<std::uint32_t>& ks,
                                std::vector<std::uint8_t>& count) {
                              for (std::size_t i = 0; i < len; ++i) ks[i] = static_cast<std::uint32_t>(lo + i);
                              kernels::count_prime_divisors(std::span(ks.data(), len), divisors,
                                                            std::span(count.data(), len));
                            });
  } else {
    const auto small = sieve_primes(isqrt(n));
    weights = omega_weights(law, limits.jobs,
                            [&](std::uint64_t lo, std::size_t len, std::vector<std::uint32_t>& residual,
                                std::vector<std::uint8_t>& count) { omega_block(lo, len, small, residual, count); });
  }

  OmegaDistribution out;
  out.n = n;
  out.law = law.descriptor();
  out.window = window;
  Rational second = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out.masses.push_back(make_rational(weights[j], law.total_weight()));
    out.mean += out.masses.back() * static_cast<unsigned long>(j);
    second += out.masses.back() * static_cast<unsigned long>(j * j);
  }
  out.variance = second - out.mean * out.mean;
  return out;
}

PrimeWindow erdos_kac_window(std::uint64_t n) {
  if (n < 3) throw PreconditionError("apps", "log log n must be positive (n >= 3)");
  const double ll = std::log(std::log(static_cast<double>(n)));
  return {1.0, std::pow(static_cast<double>(n), 1.0 / (3.0 * ll * ll))};
}

double wasserstein_step_vs_gaussian(const std::vector<double>& points, const std::vector<double>& probs, double mu,
                                    double sigma) {
  if (!(sigma > 0)) throw ParameterError("apps", "sigma must be positive");
  if (points.size() != probs.size()) throw PreconditionError("apps", "points and probabilities differ in length");
  if (!std::is_sorted(points.begin(), points.end())) throw PreconditionError("apps", "points must be ascending");
  std::vector<double> z(points.size());
  std::vector<double> F(points.size());
  std::vector<double> S(points.size());
  long double acc = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    z[i] = (points[i] - mu) / sigma;
    acc += probs[i];
    F[i] = static_cast<double>(acc);
  }
  acc = 0;
  for (std::size_t i = points.size(); i-- > 0;) {
    S[i] = static_cast<double>(acc);
    acc += probs[i];
  }
  return sigma * w1_standard(z, F, S);
}

double wasserstein_to_gaussian(const OmegaDistribution& dist, double mu, double sigma, bool standardize) {
  if (!(sigma > 0)) throw ParameterError("apps", "sigma must be positive");
  std::vector<double> z;
  std::vector<double> F;
  std::vector<double> S;
  Rational cdf = 0;
  for (std::size_t j = 0; j < dist.masses.size(); ++j) {
    if (sgn(dist.masses[j]) == 0) continue;
    cdf += dist.masses[j];
    z.push_back((static_cast<double>(j) - mu) / sigma);
    F.push_back(to_double(cdf));
    S.push_back(to_double(1 - cdf));
  }
  const double w = w1_standard(z, F, S);
  return standardize ? w : sigma * w;
}

LawSpec LawFamily::make(std::uint64_t n, const LawLimits& limits) const {
  switch (kind) {
    case LawKind::uniform:
      return make_uniform_law(n);
    case LawKind::pareto:
      return make_pareto_law(n, s, limits);
    case LawKind::density:
      return make_density_law(n, density, limits);
    case LawKind::custom:
      break;
  }
  throw ParameterError("apps", "custom laws have a fixed n and do not form a family over an n grid");
}

std::string LawFamily::name() const {
  switch (kind) {
    case LawKind::uniform:
      return "uniform";
    case LawKind::pareto:
      return "pareto(s=" + format_double(s) + ")";
    case LawKind::density:
      return "density(" + density + ")";
    case LawKind::custom:
      break;
  }
  return "custom";
}

CertificationError::CertificationError(const HtCertificate& cert, std::uint64_t n)
    : Error("apps", "law fails (H_t) at n = " + std::to_string(n) + " with t = " + format_double(cert.t) +
                        ", kappa = " + format_double(cert.kappa) + " (needs kappa >= " +
                        format_double(cert.required_kappa) + ")"),
      cert_(cert) {}

std::vector<ErdosKacRow> erdos_kac_experiment(const LawFamily& family, const std::vector<std::uint64_t>& n_grid,
                                              const ExactLimits& limits) {
  std::vector<ErdosKacRow> rows;
  for (std::uint64_t n : n_grid) {
    if (n < 3) throw PreconditionError("apps", "standardization needs log log n > 0 (n >= 3)");
    const LawSpec law = family.make(n, LawLimits{limits.max_n});
    ErdosKacRow row;
    row.n = n;
    row.certificate = certify_ht(law, family.t, family.kappa);
    if (!row.certificate.holds) throw CertificationError(row.certificate, n);
    const auto dist = omega_distribution(law, std::nullopt, limits);
    row.log_log_n = std::log(std::log(static_cast<double>(n)));
    row.pre_asymptotic = row.log_log_n < 1.0;
    row.w1 = wasserstein_to_gaussian(dist, row.log_log_n, std::sqrt(row.log_log_n), true);
    const double rate = std::log(row.log_log_n) / std::sqrt(row.log_log_n);
    if (rate > 0) {
      row.reference_rate = rate;
      row.ratio = row.w1 / rate;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json IndicatorProcessSpec::to_json() const {
  nlohmann::json lam = nlohmann::json::array();
  for (const auto& q : intensities) lam.push_back(to_fraction_string(q));
  return {{"a_n", a_n}, {"gamma", gamma.to_json()}, {"positions", positions}, {"intensities", lam}};
}

IndicatorProcessSpec make_indicator_process(double a_n, std::optional<std::uint64_t> n) {
  if (!(a_n >= 2.0)) throw ParameterError("apps", "a_n must be >= 2");
  const double top = std::pow(a_n, std::numbers::e);
  const std::uint64_t range = n.value_or(static_cast<std::uint64_t>(std::floor(top)));
  if (static_cast<double>(range) < a_n) throw PreconditionError("apps", "a_n exceeds n");
  IndicatorProcessSpec spec;
  spec.a_n = a_n;
  spec.gamma = gamma_window(range, a_n, std::min(top, static_cast<double>(range)));
  const double log_a = std::log(a_n);
  for (std::uint64_t p : spec.gamma.primes()) {
    spec.positions.push_back(std::log(std::log(static_cast<double>(p)) / log_a));
    spec.intensities.push_back(make_rational(1, p));
  }
  return spec;
}

PoissonBinomialTv poisson_binomial_tv(std::span<const std::uint64_t> primes) {
  PoissonBinomialTv out;
  if (primes.empty()) return out;
  const auto pb = poisson_binomial_pmf(primes);
  Rational lambda = 0;
  for (std::uint64_t p : primes) lambda += make_rational(1, p);
  const double lam = to_double(lambda);

  auto T = static_cast<std::uint64_t>(pb.size());  // past the Poisson-binomial support
  while (!(static_cast<double>(T) > lam) || chernoff_poisson_tail(lam, static_cast<double>(T)) >= kPoissonTailTarget) {
    ++T;
  }
  out.truncation = T;
  out.tail_bound = chernoff_poisson_tail(lam, static_cast<double>(T));

  Mpfr lam_f, pmf, diff, sum, tmp;
  mpfr_set_q(lam_f.get(), lambda.get_mpq_t(), MPFR_RNDN);
  mpfr_neg(pmf.get(), lam_f.get(), MPFR_RNDN);
  mpfr_exp(pmf.get(), pmf.get(), MPFR_RNDN);  // P[M = 0]
  mpfr_set_zero(sum.get(), 1);
  for (std::uint64_t k = 0; k < T; ++k) {
    if (k < pb.size()) {
      mpfr_set_q(tmp.get(), pb[k].get_mpq_t(), MPFR_RNDN);
      mpfr_sub(diff.get(), tmp.get(), pmf.get(), MPFR_RNDN);
      mpfr_abs(diff.get(), diff.get(), MPFR_RNDN);
      mpfr_add(sum.get(), sum.get(), diff.get(), MPFR_RNDU);
    } else {
      mpfr_add(sum.get(), sum.get(), pmf.get(), MPFR_RNDU);
    }
    mpfr_mul(pmf.get(), pmf.get(), lam_f.get(), MPFR_RNDN);
    mpfr_div_ui(pmf.get(), pmf.get(), k + 1, MPFR_RNDN);
  }
  mpfr_add_d(sum.get(), sum.get(), out.tail_bound, MPFR_RNDU);
  // Slack for the 256-bit roundings above.
  mpfr_set_ui_2exp(tmp.get(), static_cast<unsigned long>(T + 1), -200, MPFR_RNDU);
  mpfr_add(sum.get(), sum.get(), tmp.get(), MPFR_RNDU);
  mpfr_div_2ui(sum.get(), sum.get(), 1, MPFR_RNDU);
  out.tv = mpfr_get_d(sum.get(), MPFR_RNDU);
  return out;
}

nlohmann::json PoissonMarginal::to_json() const {
  return {{"t", t},
          {"atoms", atoms},
          {"truncated", truncated},
          {"tv", tv},
          {"poisson_truncation", poisson_truncation},
          {"tail_bound", tail_bound},
          {"lecam", to_fraction_string(lecam)},
          {"lecam_decimal", to_decimal_string(lecam)},
          {"two_over_an", two_over_an},
          {"tv_le_lecam", tv_le_lecam},
          {"lecam_le_two_over_an", lecam_le_two_over_an}};
}

PoissonMarginal poisson_marginal_tv(const IndicatorProcessSpec& spec, double t, const ExactLimits& limits) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("apps", "t must lie in [0, 1]");
  std::vector<std::uint64_t> atoms;
  for (std::size_t i = 0; i < spec.gamma.size(); ++i) {
    if (spec.positions[i] <= t) atoms.push_back(spec.gamma.primes()[i]);
  }
  PoissonMarginal out;
  out.t = t;
  if (atoms.size() > limits.max_gamma) {
    atoms.resize(limits.max_gamma);
    out.truncated = true;
  }
  out.atoms = atoms.size();
  const auto tv = poisson_binomial_tv(atoms);
  out.tv = tv.tv;
  out.poisson_truncation = tv.truncation;
  out.tail_bound = tv.tail_bound;
  for (std::uint64_t p : atoms) out.lecam += make_rational(1, p * p);
  out.two_over_an = 2.0 / spec.a_n;
  out.tv_le_lecam = Rational(out.tv) <= out.lecam;
  out.lecam_le_two_over_an = out.lecam <= Rational(2) / Rational(spec.a_n);
  return out;
}

nlohmann::json PoissonProcessReport::to_json() const {
  return {{"atoms", atoms},
          {"truncated", truncated},
          {"valuation_tv", to_fraction_string(valuation_tv)},
          {"valuation_tv_decimal", to_decimal_string(valuation_tv)},
          {"coupling_sum", coupling_sum},
          {"two_over_an", two_over_an},
          {"rhs", rhs},
          {"coupling_le_two_over_an", coupling_le_two_over_an}};
}

PoissonProcessReport poisson_process_bound(const IndicatorProcessSpec& spec, const LawSpec& law,
                                           const ExactLimits& limits) {
  if (spec.gamma.n() != law.n()) {
    throw PreconditionError("apps", "the window was built for n = " + std::to_string(spec.gamma.n()) +
                                        " but the law has n = " + std::to_string(law.n()));
  }
  PoissonProcessReport out;
  out.atoms = spec.gamma.size();
  GammaSet window = spec.gamma;
  if (window.size() > limits.max_gamma) {
    window = window.first(limits.max_gamma);
    out.truncated = true;
  }
  out.valuation_tv = window.empty() ? Rational(0) : exact_tv(law, window, limits);
  std::vector<double> terms;
  for (std::uint64_t p : spec.gamma.primes()) {
    const double q = 1.0 / static_cast<double>(p);
    terms.push_back(-q * std::expm1(-q));
  }
  out.coupling_sum = kernels::compensated_sum(terms);
  out.two_over_an = 2.0 / spec.a_n;
  out.rhs = to_double(out.valuation_tv) + out.two_over_an;
  out.coupling_le_two_over_an = out.coupling_sum <= out.two_over_an;
  return out;
}

}  // namespace kbv
