#include "kbv/rational.hpp"

#include <mpfr.h>

#include <cmath>
#include <limits>
#include <memory>

#include "kbv/error.hpp"

namespace kbv {
namespace {

constexpr int kGuardUlps = 4;

struct MpfrValue {
  explicit MpfrValue(mpfr_prec_t prec) { mpfr_init2(v, prec); }
  ~MpfrValue() { mpfr_clear(v); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;
  mpfr_t v;
};

}  // namespace

Rational parse_rational(const std::string& text) {
  Rational q;
  if (q.set_str(text, 10) != 0 || q.get_den() == 0) {
    throw ParameterError("rational", "cannot parse rational '" + text + "'");
  }
  q.canonicalize();
  return q;
}

double to_double(const Rational& q) {
  MpfrValue x(53);
  mpfr_set_q(x.v, q.get_mpq_t(), MPFR_RNDN);
  return mpfr_get_d(x.v, MPFR_RNDN);
}

std::string to_decimal_string(const Rational& q, int digits) {
  MpfrValue x(512);
  mpfr_set_q(x.v, q.get_mpq_t(), MPFR_RNDN);
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", digits - 1, x.v);
  std::unique_ptr<char, void (*)(char*)> guard(buf, mpfr_free_str);
  return std::string(buf);
}

bool le_rounded_down(const Rational& lhs, double bound) {
  if (std::isnan(bound)) return false;
  if (std::isinf(bound)) return bound > 0;
  double r = bound;
  for (int i = 0; i < kGuardUlps; ++i) r = std::nextafter(r, -std::numeric_limits<double>::infinity());
  return cmp(lhs, Rational(r)) <= 0;
}

bool ge_rounded_up(const Rational& lhs, double bound) {
  if (std::isnan(bound)) return false;
  if (std::isinf(bound)) return bound < 0;
  double r = bound;
  for (int i = 0; i < kGuardUlps; ++i) r = std::nextafter(r, std::numeric_limits<double>::infinity());
  return cmp(lhs, Rational(r)) >= 0;
}

}  // namespace kbv
