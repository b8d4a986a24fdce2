#include <atomic>
#include <cstdlib>
#include <string>

#include "kbv/error.hpp"
#include "kbv/kernels.hpp"

namespace kbv::kernels {
namespace {

Isa initial_isa() noexcept {
  const char* force = std::getenv("KBV_FORCE_SCALAR");
  if (force != nullptr && std::string(force) == "1") return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

Isa detected_isa() noexcept {
#if defined(KBV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) noexcept {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  active().store(isa, std::memory_order_relaxed);
}

PrimeDivisor make_divisor(std::uint32_t p) {
  if (p < 2) throw PreconditionError("kernels", "divisor must be a prime >= 2");
  PrimeDivisor d;
  d.p = p;
  d.limit = UINT32_MAX / p;
  if (p % 2 == 1) {
    // Newton iteration for the inverse modulo 2^32; x = p is correct to 3 bits.
    std::uint32_t x = p;
    for (int i = 0; i < 4; ++i) x *= 2U - p * x;
    d.inv = x;
  }
  return d;
}

std::vector<PrimeDivisor> make_divisors(std::span<const std::uint64_t> primes) {
  std::vector<PrimeDivisor> out;
  out.reserve(primes.size());
  for (std::uint64_t p : primes) {
    if (p > UINT32_MAX) throw ResourceError("kernels", "prime exceeds the 32-bit kernel range");
    out.push_back(make_divisor(static_cast<std::uint32_t>(p)));
  }
  return out;
}

void smooth_part(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                 std::span<std::uint32_t> out) {
#if defined(KBV_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::smooth_part(ks, primes, out);
#endif
  scalar::smooth_part(ks, primes, out);
}

void count_prime_divisors(std::span<const std::uint32_t> ks, std::span<const PrimeDivisor> primes,
                          std::span<std::uint8_t> out) {
#if defined(KBV_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::count_prime_divisors(ks, primes, out);
#endif
  scalar::count_prime_divisors(ks, primes, out);
}

double compensated_sum(std::span<const double> xs) {
#if defined(KBV_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::compensated_sum(xs);
#endif
  return scalar::compensated_sum(xs);
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
#if defined(KBV_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::abs_diff_sum(a, b);
#endif
  return scalar::abs_diff_sum(a, b);
}

}  // namespace kbv::kernels
