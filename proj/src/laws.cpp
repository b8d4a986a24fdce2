#include "kbv/laws.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "kbv/error.hpp"

namespace kbv {
namespace {

constexpr mpfr_prec_t kParetoPrecision = 256;
constexpr unsigned long kParetoScaleBits = 192;

void check_dense(std::uint64_t n, const LawLimits& limits) {
  if (n > limits.max_dense_n) {
    throw ResourceError("laws", "n = " + std::to_string(n) + " exceeds the dense-law limit " +
                                    std::to_string(limits.max_dense_n));
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// a/b > c/d for positive denominators.
bool greater(const BigInt& a, const BigInt& b, const BigInt& c, const BigInt& d) { return a * d > c * b; }

}  // namespace

std::string law_kind_name(LawKind kind) {
  switch (kind) {
    case LawKind::uniform:
      return "uniform";
    case LawKind::pareto:
      return "pareto";
    case LawKind::density:
      return "density";
    case LawKind::custom:
      return "custom";
  }
  return "unknown";
}

BigInt LawSpec::weight(std::uint64_t k) const {
  if (k == 0 || k > n_) return 0;
  if (weights_.empty()) return 1;
  return weights_[k - 1];
}

Rational LawSpec::mass(std::uint64_t k) const { return make_rational(weight(k), total_); }

nlohmann::json LawSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = law_kind_name(kind_);
  j["descriptor"] = descriptor_;
  j["n"] = n_;
  j["relative_mass_error"] = relative_error_;
  j["renormalized"] = renormalized_;
  return j;
}

LawSpec make_uniform_law(std::uint64_t n) {
  if (n == 0) throw ParameterError("laws", "n must be >= 1");
  LawSpec law;
  law.n_ = n;
  law.kind_ = LawKind::uniform;
  law.descriptor_ = "uniform";
  law.total_ = to_big(n);
  return law;
}

LawSpec make_pareto_law(std::uint64_t n, double s, const LawLimits& limits) {
  if (n == 0) throw ParameterError("laws", "n must be >= 1");
  if (!(s >= 0.0 && s < 1.0)) throw ParameterError("laws", "pareto exponent s must lie in [0, 1)");
  LawSpec law;
  law.n_ = n;
  law.kind_ = LawKind::pareto;
  law.descriptor_ = "pareto(s=" + format_double(s) + ")";
  if (s == 0.0) {
    law.total_ = to_big(n);
    return law;
  }
  check_dense(n, limits);

  // w(k) = round(k^{-s} 2^192): a dyadic rational law within relative error
  // n^s 2^{-191} of the exact Pareto masses.
  mpfr_t x;
  mpfr_t exponent;
  mpfr_init2(x, kParetoPrecision);
  mpfr_init2(exponent, kParetoPrecision);
  mpfr_set_d(exponent, -s, MPFR_RNDN);
  law.weights_.resize(n);
  law.total_ = 0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    mpfr_set_ui(x, static_cast<unsigned long>(k), MPFR_RNDN);
    mpfr_pow(x, x, exponent, MPFR_RNDN);
    mpfr_mul_2ui(x, x, kParetoScaleBits, MPFR_RNDN);
    mpfr_get_z(law.weights_[k - 1].get_mpz_t(), x, MPFR_RNDN);
    law.total_ += law.weights_[k - 1];
  }
  mpfr_clear(x);
  mpfr_clear(exponent);
  law.relative_error_ = 2.0 * std::pow(static_cast<double>(n), s) * std::ldexp(1.0, -190);
  return law;
}

LawSpec make_weighted_law(std::uint64_t n, LawKind kind, std::string descriptor, const std::vector<Rational>& masses,
                          const LawLimits& limits) {
  if (n == 0) throw ParameterError("laws", "n must be >= 1");
  check_dense(n, limits);
  if (masses.size() != n) throw PreconditionError("laws", "mass vector length must equal n");
  BigInt common = 1;
  Rational sum = 0;
  for (const auto& m : masses) {
    if (sgn(m) < 0) throw ParameterError("laws", "masses must be nonnegative");
    mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), m.get_den().get_mpz_t());
    sum += m;
  }
  if (sgn(sum) == 0) throw ParameterError("laws", "masses sum to zero; the law cannot be normalized");
  LawSpec law;
  law.n_ = n;
  law.kind_ = kind;
  law.descriptor_ = std::move(descriptor);
  law.weights_.resize(n);
  law.total_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    law.weights_[i] = masses[i].get_num() * (common / masses[i].get_den());
    law.total_ += law.weights_[i];
  }
  law.renormalized_ = sum != 1;
  return law;
}

LawSpec make_density_law(std::uint64_t n, const std::function<Rational(std::uint64_t)>& upsilon,
                         std::string descriptor, const LawLimits& limits) {
  check_dense(n, limits);
  std::vector<Rational> masses(n);
  for (std::uint64_t k = 1; k <= n; ++k) masses[k - 1] = upsilon(k);
  LawSpec law = make_weighted_law(n, LawKind::density, std::move(descriptor), masses, limits);
  return law;
}

LawSpec make_density_law(std::uint64_t n, const std::string& descriptor, const LawLimits& limits) {
  if (descriptor == "linear") {
    return make_density_law(n, [](std::uint64_t k) { return Rational(to_big(k)); }, "density(linear)", limits);
  }
  if (descriptor.rfind("pow:", 0) == 0) {
    const long e = std::stol(descriptor.substr(4));
    if (e < 0) throw ParameterError("laws", "density power must be >= 0");
    return make_density_law(
        n,
        [e](std::uint64_t k) {
          BigInt v;
          mpz_pow_ui(v.get_mpz_t(), to_big(k).get_mpz_t(), static_cast<unsigned long>(e));
          return Rational(v);
        },
        "density(" + descriptor + ")", limits);
  }
  if (descriptor.rfind("affine:", 0) == 0) {
    const std::string args = descriptor.substr(7);
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw ParameterError("laws", "affine density needs 'affine:A,B'");
    const Rational a = parse_rational(args.substr(0, comma));
    const Rational b = parse_rational(args.substr(comma + 1));
    return make_density_law(
        n, [a, b](std::uint64_t k) { return Rational(a + b * Rational(to_big(k))); }, "density(" + descriptor + ")",
        limits);
  }
  throw ParameterError("laws", "unknown density descriptor '" + descriptor + "'");
}

LawSpec make_custom_law(std::uint64_t n, const std::vector<std::pair<std::uint64_t, Rational>>& entries,
                        const LawLimits& limits) {
  check_dense(n, limits);
  std::vector<Rational> masses(n);
  std::vector<bool> seen(n, false);
  for (const auto& [k, m] : entries) {
    if (k == 0 || k > n) {
      throw ParameterError("laws", "custom law point " + std::to_string(k) + " lies outside [1, n]");
    }
    if (seen[k - 1]) throw ParameterError("laws", "custom law repeats point " + std::to_string(k));
    seen[k - 1] = true;
    masses[k - 1] = m;
  }
  return make_weighted_law(n, LawKind::custom, "custom", masses, limits);
}

LawSpec load_custom_law_csv(const std::filesystem::path& path, std::optional<std::uint64_t> n,
                            const LawLimits& limits) {
  std::ifstream in(path);
  if (!in) throw ParameterError("laws", "cannot open custom law file " + path.string());
  std::vector<std::pair<std::uint64_t, Rational>> entries;
  std::uint64_t max_k = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    const bool numeric = !fields.empty() && !fields[0].empty() &&
                         std::all_of(fields[0].begin(), fields[0].end(), [](char c) { return c >= '0' && c <= '9'; });
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 3 || !numeric) throw ParameterError("laws", "malformed custom law line '" + line + "'");
    const std::uint64_t k = std::stoull(fields[0]);
    const BigInt num(fields[1]);
    const BigInt den(fields[2]);
    if (den == 0) throw ParameterError("laws", "zero denominator in custom law line '" + line + "'");
    entries.emplace_back(k, make_rational(num, den));
    max_k = std::max(max_k, k);
  }
  return make_custom_law(n.value_or(max_k), entries, limits);
}

DivisorSums::DivisorSums(const LawSpec& law) : law_(&law) {
  if (law.unit_weights()) return;
  const std::uint64_t n = law.n();
  sums_.resize(n);
  const auto& w = law.weights();
  for (std::uint64_t a = 1; a <= n; ++a) {
    BigInt& acc = sums_[a - 1];
    for (std::uint64_t k = a; k <= n; k += a) acc += w[k - 1];
  }
}

BigInt DivisorSums::sum(std::uint64_t a) const {
  if (a == 0) throw PreconditionError("laws", "divisor must be >= 1");
  if (a > law_->n()) return 0;
  if (sums_.empty()) return to_big(law_->n() / a);
  return sums_[a - 1];
}

BigInt DivisorSums::sum(const BigInt& a) const {
  if (a > to_big(law_->n())) return 0;
  return sum(static_cast<std::uint64_t>(a.get_ui()));
}

Rational DivisorSums::probability(std::uint64_t a) const { return make_rational(sum(a), law_->total_weight()); }

Rational divisor_probability(const LawSpec& law, std::uint64_t a) {
  if (a == 0) throw PreconditionError("laws", "divisor must be >= 1");
  if (a > law.n()) return 0;
  if (law.unit_weights()) return make_rational(law.n() / a, law.n());
  BigInt acc = 0;
  for (std::uint64_t k = a; k <= law.n(); k += a) acc += law.weights()[k - 1];
  return make_rational(acc, law.total_weight());
}

nlohmann::json HtCertificate::to_json() const {
  nlohmann::json j;
  j["t"] = t;
  j["kappa"] = kappa;
  j["max_dev"] = to_fraction_string(max_dev);
  j["max_dev_decimal"] = to_decimal_string(max_dev);
  j["argmax_dev"] = argmax_dev;
  j["max_ratio"] = to_fraction_string(max_ratio);
  j["max_ratio_decimal"] = to_decimal_string(max_ratio);
  j["argmax_ratio"] = argmax_ratio;
  j["beyond_n_dev"] = to_fraction_string(beyond_n_dev);
  j["required_kappa"] = required_kappa;
  j["interval_error"] = interval_error;
  j["holds"] = holds;
  j["renormalized"] = renormalized;
  return j;
}

HtCertificate certify_ht(const LawSpec& law, double t, double kappa) {
  if (!(t > 0)) throw ParameterError("laws", "t must be positive");
  if (!(kappa >= 1)) throw ParameterError("laws", "kappa must be >= 1");
  const std::uint64_t n = law.n();
  HtCertificate cert;
  cert.t = t;
  cert.kappa = kappa;
  cert.renormalized = law.renormalized();

  // Deviation at a is |a S(a) - W| / (a W); ratio is a S(a) / W.
  if (law.unit_weights()) {
    using u128 = unsigned __int128;
    u128 best_dev_num = 0;
    u128 best_dev_den = 1;
    u128 best_ratio_num = 0;
    for (std::uint64_t a = 1; a <= n; ++a) {
      const u128 as = static_cast<u128>(a) * (n / a);
      const u128 dev_num = n - as;  // a floor(n/a) <= n
      const u128 dev_den = static_cast<u128>(a);  // common factor W = n dropped
      if (dev_num * best_dev_den > best_dev_num * dev_den) {
        best_dev_num = dev_num;
        best_dev_den = dev_den;
        cert.argmax_dev = a;
      }
      if (as > best_ratio_num) {
        best_ratio_num = as;
        cert.argmax_ratio = a;
      }
    }
    auto big = [](u128 v) {
      BigInt hi = to_big(static_cast<std::uint64_t>(v >> 64));
      return BigInt((hi << 64) + to_big(static_cast<std::uint64_t>(v)));
    };
    cert.max_dev = make_rational(big(best_dev_num), big(best_dev_den) * to_big(n));
    cert.max_ratio = make_rational(big(best_ratio_num), to_big(n));
  } else {
    const DivisorSums sums(law);
    const BigInt& W = law.total_weight();
    BigInt best_dev_num = 0;
    BigInt best_dev_den = 1;
    BigInt best_ratio_num = 0;
    BigInt as;
    BigInt dev_num;
    for (std::uint64_t a = 1; a <= n; ++a) {
      const BigInt big_a = to_big(a);
      as = big_a * sums.sum(a);
      dev_num = abs(as - W);
      if (greater(dev_num, big_a, best_dev_num, best_dev_den)) {
        best_dev_num = dev_num;
        best_dev_den = big_a;
        cert.argmax_dev = a;
      }
      if (as > best_ratio_num) {
        best_ratio_num = as;
        cert.argmax_ratio = a;
      }
    }
    cert.max_dev = make_rational(best_dev_num, best_dev_den * W);
    cert.max_ratio = make_rational(best_ratio_num, W);
  }
  cert.beyond_n_dev = make_rational(1, n + 1);

  const double n_pow_t = std::pow(static_cast<double>(n), t);
  cert.interval_error = law.relative_mass_error();
  const Rational err(cert.interval_error);
  const Rational dev_hi = cert.max_dev + err;
  const Rational ratio_hi = cert.max_ratio * (1 + err);

  cert.required_kappa = std::max({1.0, n_pow_t * to_double(dev_hi), to_double(ratio_hi) - 1.0});
  if (t > 1) cert.required_kappa = std::max(cert.required_kappa, n_pow_t / static_cast<double>(n + 1));

  cert.holds = le_rounded_down(dev_hi, kappa / n_pow_t) && le_rounded_down(ratio_hi, 1.0 + kappa);
  if (t > 1) cert.holds = cert.holds && le_rounded_down(cert.beyond_n_dev, kappa / n_pow_t);
  return cert;
}

Rational tv_to_uniform(const LawSpec& law) {
  if (law.unit_weights()) return 0;
  const BigInt big_n = to_big(law.n());
  const BigInt& W = law.total_weight();
  BigInt acc = 0;
  for (const auto& w : law.weights()) acc += abs(big_n * w - W);
  return make_rational(acc, 2 * big_n * W);
}

}  // namespace kbv
