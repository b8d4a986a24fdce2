// Compiled with -mavx2; only reached when the CPU reports AVX2.

#include <immintrin.h>

#include <array>
#include <cmath>

#include "kbv/kernels.hpp"

namespace kbv::kernels::avx2 {
namespace {

constexpr std::size_t kLanes32 = 8;
constexpr std::size_t kLanes64 = 4;

inline __m256i le_epu32(__m256i a, __m256i b) {
  return _mm256_cmpeq_epi32(_mm256_min_epu32(a, b), a);
}

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

struct LaneNeumaier {
  __m256d sum = _mm256_setzero_pd();
  __m256d comp = _mm256_setzero_pd();

  void add(__m256d x) {
    const __m256d t = _mm256_add_pd(sum, x);
    const __m256d big_sum = _mm256_cmp_pd(abs_pd(sum), abs_pd(x), _CMP_GE_OQ);
    const __m256d when_sum = _mm256_add_pd(_mm256_sub_pd(sum, t), x);
    const __m256d when_x = _mm256_add_pd(_mm256_sub_pd(x, t), sum);
    comp = _mm256_add_pd(comp, _mm256_blendv_pd(when_x, when_sum, big_sum));
    sum = t;
  }

  // Folds the lanes and the scalar tail through one scalar compensated pass.
  double finish(std::span<const double> tail_terms) const {
    alignas(32) std::array<double, 2 * kLanes64> lanes{};
    _mm256_store_pd(lanes.data(), sum);
    _mm256_store_pd(lanes.data() + kLanes64, comp);
    double s = 0.0;
    double c = 0.0;
    auto add = [&](double x) {
      const double t = s + x;
      if (std::fabs(s) >= std::fabs(x)) {
        c += (s - t) + x;
      } else {
        c += (x - t) + s;
      }
      s = t;
    };
    for (double x : lanes) add(x);
    for (double x : tail_terms) add(x);
    return s + c;
  }
};

}  // namespace

void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out) {
  const std::size_t full = ks.size() / kLanes32 * kLanes32;
  const __m256i one = _mm256_set1_epi32(1);
  const __m256i zero = _mm256_setzero_si256();
  for (std::size_t i = 0; i < full; i += kLanes32) {
    __m256i rest = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(ks.data() + i));
    __m256i part = one;
    for (const auto& d : primes) {
      if (d.p == 2) {
        for (;;) {
          const __m256i even = _mm256_cmpeq_epi32(_mm256_and_si256(rest, one), zero);
          if (_mm256_testz_si256(even, even)) break;
          rest = _mm256_blendv_epi8(rest, _mm256_srli_epi32(rest, 1), even);
          part = _mm256_blendv_epi8(part, _mm256_slli_epi32(part, 1), even);
        }
        continue;
      }
      const __m256i inv = _mm256_set1_epi32(static_cast<int>(d.inv));
      const __m256i limit = _mm256_set1_epi32(static_cast<int>(d.limit));
      const __m256i p = _mm256_set1_epi32(static_cast<int>(d.p));
      for (;;) {
        const __m256i q = _mm256_mullo_epi32(rest, inv);
        const __m256i divisible = le_epu32(q, limit);
        if (_mm256_testz_si256(divisible, divisible)) break;
        rest = _mm256_blendv_epi8(rest, q, divisible);
        part = _mm256_blendv_epi8(part, _mm256_mullo_epi32(part, p), divisible);
      }
    }
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i), part);
  }
  scalar::smooth_part(ks.subspan(full), primes, out.subspan(full));
}

void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out) {
  const std::size_t full = ks.size() / kLanes32 * kLanes32;
  const __m256i one = _mm256_set1_epi32(1);
  const __m256i zero = _mm256_setzero_si256();
  alignas(32) std::array<std::uint32_t, kLanes32> counts{};
  for (std::size_t i = 0; i < full; i += kLanes32) {
    const __m256i k = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(ks.data() + i));
    __m256i acc = zero;
    for (const auto& d : primes) {
      __m256i divides;
      if (d.p == 2) {
        divides = _mm256_cmpeq_epi32(_mm256_and_si256(k, one), zero);
      } else {
        const __m256i q = _mm256_mullo_epi32(k, _mm256_set1_epi32(static_cast<int>(d.inv)));
        divides = le_epu32(q, _mm256_set1_epi32(static_cast<int>(d.limit)));
      }
      acc = _mm256_sub_epi32(acc, divides);  // mask lanes are -1
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(counts.data()), acc);
    for (std::size_t j = 0; j < kLanes32; ++j) out[i + j] = static_cast<std::uint8_t>(counts[j]);
  }
  scalar::count_prime_divisors(ks.subspan(full), primes, out.subspan(full));
}

double compensated_sum(std::span<const double> xs) {
  const std::size_t full = xs.size() / kLanes64 * kLanes64;
  LaneNeumaier acc;
  for (std::size_t i = 0; i < full; i += kLanes64) acc.add(_mm256_loadu_pd(xs.data() + i));
  return acc.finish(xs.subspan(full));
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  const std::size_t full = a.size() / kLanes64 * kLanes64;
  LaneNeumaier acc;
  for (std::size_t i = 0; i < full; i += kLanes64) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc.add(abs_pd(d));
  }
  std::array<double, kLanes64> tail{};
  const std::size_t rest = a.size() - full;
  for (std::size_t i = 0; i < rest; ++i) tail[i] = std::fabs(a[full + i] - b[full + i]);
  return acc.finish(std::span<const double>(tail.data(), rest));
}

}  // namespace kbv::kernels::avx2
