#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace kbv {

using BigInt = mpz_class;
using Rational = mpq_class;

inline BigInt to_big(std::uint64_t v) {
  BigInt r;
  mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return r;
}

inline Rational make_rational(const BigInt& num, const BigInt& den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Rational make_rational(std::uint64_t num, std::uint64_t den) {
  return make_rational(to_big(num), to_big(den));
}

// "num/den" in lowest terms; integers print as "k/1" so the shape is fixed.
inline std::string to_fraction_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// Rational parsed from "num/den" or a plain integer.
Rational parse_rational(const std::string& text);

// Nearest double (round-to-nearest on the exact value).
double to_double(const Rational& q);

// Fixed decimal expansion with `digits` significant digits; exact-to-string so
// two runs on the same rational produce identical bytes.
std::string to_decimal_string(const Rational& q, int digits = 17);

// Exact comparison of a rational against a double bound that is first rounded
// down by a few ulps. A true result means lhs <= bound holds with margin to
// spare for the rounding in the bound's evaluation.
bool le_rounded_down(const Rational& lhs, double bound);

// Same idea from the other side: lhs >= bound after rounding the bound up.
bool ge_rounded_up(const Rational& lhs, double bound);

}  // namespace kbv
