#include <cmath>

#include "kbv/kernels.hpp"

namespace kbv::kernels::scalar {
namespace {

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

}  // namespace

void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out) {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    std::uint32_t rest = ks[i];
    std::uint32_t part = 1;
    for (const auto& d : primes) {
      if (d.p == 2) {
        while ((rest & 1U) == 0U) {
          rest >>= 1;
          part <<= 1;
        }
        continue;
      }
      for (;;) {
        const std::uint32_t q = rest * d.inv;
        if (q > d.limit) break;
        rest = q;
        part *= d.p;
      }
    }
    out[i] = part;
  }
}

void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::uint32_t k = ks[i];
    std::uint8_t count = 0;
    for (const auto& d : primes) {
      const bool divides = d.p == 2 ? (k & 1U) == 0U : k * d.inv <= d.limit;
      count = static_cast<std::uint8_t>(count + (divides ? 1 : 0));
    }
    out[i] = count;
  }
}

double compensated_sum(std::span<const double> xs) {
  Neumaier acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  Neumaier acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(std::fabs(a[i] - b[i]));
  return acc.value();
}

}  // namespace kbv::kernels::scalar
