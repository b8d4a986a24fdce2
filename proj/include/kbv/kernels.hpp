#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference and,
// on x86-64, an AVX2 variant. The variant is picked once at runtime from the
// CPU feature flags; tests compare both paths element by element.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kbv::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// Best variant this CPU and build can run.
Isa detected_isa() noexcept;

// Variant the dispatching entry points use. Defaults to detected_isa();
// KBV_FORCE_SCALAR=1 in the environment pins it to scalar.
Isa active_isa() noexcept;

// Override for tests and benchmarks. Requests for an unavailable variant fall
// back to scalar.
void set_active_isa(Isa isa) noexcept;

// Divisibility by a fixed prime through its inverse modulo 2^32:
// p | k  <=>  k * inv (mod 2^32) <= floor((2^32 - 1) / p), and the product is
// then exactly k / p. For p = 2 the kernels test the low bit instead.
struct PrimeDivisor {
  std::uint32_t p = 0;
  std::uint32_t inv = 0;    // p^{-1} mod 2^32 (odd p only)
  std::uint32_t limit = 0;  // floor((2^32 - 1) / p)
};

PrimeDivisor make_divisor(std::uint32_t p);
std::vector<PrimeDivisor> make_divisors(std::span<const std::uint64_t> primes);

// out[i] = product over the primes of p^{v_p(ks[i])}, the part of ks[i] built
// from the listed primes. ks[i] must be >= 1.
void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out);

// out[i] = number of listed primes dividing ks[i].
void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs);

// Neumaier-compensated sum of |a[i] - b[i]|.
double abs_diff_sum(std::span<const double> a, std::span<const double> b);

namespace scalar {
void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out);
void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out);
double compensated_sum(std::span<const double> xs);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

#if defined(KBV_HAVE_AVX2)
namespace avx2 {
void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out);
void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out);
double compensated_sum(std::span<const double> xs);
double abs_diff_sum(std::span<const double> a, std::span<const double> b);
}  // namespace avx2
#endif

}  // namespace kbv::kernels
