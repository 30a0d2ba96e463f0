#pragma once
// Deterministic random streams. Every stream is keyed by a tuple of integers
// (base seed, model id, replicate, ...) hashed through splitmix64, so parallel
// and serial executions draw identical numbers.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <limits>

#if defined(__GNUC__) && defined(__x86_64__)
#include <immintrin.h>
#endif

#include "error.hpp"

namespace chibsel {

inline constexpr std::uint64_t splitmix64_step(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixing hash of an ordered key tuple. Each key passes through a full
/// avalanche step, so tuples that differ in any key or in length diverge.
inline constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = 0x6A09E667F3BCC909ULL;
  std::uint64_t out = splitmix64_step(state);
  for (std::uint64_t k : keys) {
    state = out ^ k;
    out = splitmix64_step(state);
  }
  return out;
}

namespace detail {

// Layer tables of the 128-strip ziggurat for the half-normal density.
struct ZigguratTables {
  static constexpr double r = 3.442619855899;
  static constexpr double v = 9.91256303526217e-3;
  std::array<std::uint32_t, 128> k{};
  std::array<double, 128> w{};
  std::array<double, 128> f{};

  ZigguratTables() {
    const double m = 2147483648.0;
    double d = r;
    double t = r;
    const double q = v / std::exp(-0.5 * d * d);
    k[0] = static_cast<std::uint32_t>((d / q) * m);
    k[1] = 0;
    w[0] = q / m;
    w[127] = d / m;
    f[0] = 1.0;
    f[127] = std::exp(-0.5 * d * d);
    for (int i = 126; i >= 1; --i) {
      d = std::sqrt(-2.0 * std::log(v / d + std::exp(-0.5 * d * d)));
      k[i + 1] = static_cast<std::uint32_t>((d / t) * m);
      t = d;
      f[i] = std::exp(-0.5 * d * d);
      w[i] = d / m;
    }
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

inline constexpr std::size_t kZigguratWords = 128;  // two normals per word

// Bitmap over the 2 * kZigguratWords outputs of a block, set where the fast
// path rejected and the slow path must supply the value.
using RejectMask = std::array<std::uint64_t, 2 * kZigguratWords / 64>;

inline std::uint32_t zig_magnitude(std::int32_t v) {
  return static_cast<std::uint32_t>(v < 0 ? -static_cast<std::int64_t>(v) : v);
}

// Output 2 i + h comes from bits [32 h, 32 h + 32) of word i.
inline std::int32_t zig_word_half(std::uint64_t w, std::size_t h) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(w >> (32 * h)));
}

inline void ziggurat_fast_generic(const std::uint64_t* words, double* out, RejectMask& reject) {
  const auto& z = ziggurat_tables();
  reject.fill(0);
  for (std::size_t i = 0; i < 2 * kZigguratWords; ++i) {
    const std::int32_t hz = zig_word_half(words[i / 2], i % 2);
    const std::size_t iz = static_cast<std::uint32_t>(hz) & 127u;
    out[i] = hz * z.w[iz];
    if (zig_magnitude(hz) >= z.k[iz]) reject[i / 64] |= std::uint64_t{1} << (i % 64);
  }
}

#if defined(__GNUC__) && defined(__x86_64__)
#define CHIBSEL_ZIGGURAT_AVX2 1

// Same arithmetic as ziggurat_fast_generic, eight outputs at a time.
__attribute__((target("avx2"))) inline void ziggurat_fast_avx2(const std::uint64_t* words,
                                                               double* out, RejectMask& reject) {
  const auto& z = ziggurat_tables();
  const auto* k = reinterpret_cast<const int*>(z.k.data());
  const __m256i low7 = _mm256_set1_epi32(127);
  reject.fill(0);
  for (std::size_t i = 0; i < 2 * kZigguratWords; i += 8) {
    // Little-endian: the low half of each word is the earlier output.
    const __m256i hz = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words + i / 2));
    const __m256i iz = _mm256_and_si256(hz, low7);
    const __m256i mag = _mm256_abs_epi32(hz);
    const __m256i kk = _mm256_i32gather_epi32(k, iz, 4);
    // Unsigned mag >= k.
    const __m256i bad = _mm256_cmpeq_epi32(_mm256_max_epu32(mag, kk), mag);
    const __m128i iz_lo = _mm256_castsi256_si128(iz);
    const __m128i iz_hi = _mm256_extracti128_si256(iz, 1);
    const __m256d w_lo = _mm256_i32gather_pd(z.w.data(), iz_lo, 8);
    const __m256d w_hi = _mm256_i32gather_pd(z.w.data(), iz_hi, 8);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_cvtepi32_pd(_mm256_castsi256_si128(hz)), w_lo));
    _mm256_storeu_pd(out + i + 4, _mm256_mul_pd(_mm256_cvtepi32_pd(_mm256_extracti128_si256(hz, 1)), w_hi));
    const auto bits = static_cast<std::uint64_t>(_mm256_movemask_ps(_mm256_castsi256_ps(bad)));
    reject[i / 64] |= bits << (i % 64);
  }
}

inline bool cpu_has_avx2() {
  static const bool has = __builtin_cpu_supports("avx2");
  return has;
}
#endif

inline void ziggurat_fast(const std::uint64_t* words, double* out, RejectMask& reject) {
#ifdef CHIBSEL_ZIGGURAT_AVX2
  if constexpr (std::endian::native == std::endian::little) {
    if (cpu_has_avx2()) {
      ziggurat_fast_avx2(words, out, reject);
      return;
    }
  }
#endif
  ziggurat_fast_generic(words, out, reject);
}

}  // namespace detail

inline constexpr std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// Eight interleaved xoshiro256** generators stepped together so the steps
// run in vector registers.
class XoshiroLanes {
 public:
  static constexpr std::size_t kLanes = 8;

  void seed(std::uint64_t& sm) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      a_[l] = splitmix64_step(sm);
      b_[l] = splitmix64_step(sm);
      c_[l] = splitmix64_step(sm);
      d_[l] = splitmix64_step(sm);
    }
  }

  /// Writes rounds * kLanes words; word j * kLanes + l is round j of lane l.
  void fill(std::uint64_t* out, std::size_t rounds) {
#ifdef CHIBSEL_ZIGGURAT_AVX2
    if (detail::cpu_has_avx2()) {
      fill_avx2(out, rounds);
      return;
    }
#endif
    fill_generic(out, rounds);
  }

  void fill_generic(std::uint64_t* out, std::size_t rounds) {
    for (std::size_t j = 0; j < rounds; ++j) {
      for (std::size_t l = 0; l < kLanes; ++l) {
        const std::uint64_t s1 = b_[l];
        out[j * kLanes + l] = rotl64(s1 * 5, 7) * 9;
        const std::uint64_t t = s1 << 17;
        c_[l] ^= a_[l];
        d_[l] ^= b_[l];
        b_[l] ^= c_[l];
        a_[l] ^= d_[l];
        c_[l] ^= t;
        d_[l] = rotl64(d_[l], 45);
      }
    }
  }

#ifdef CHIBSEL_ZIGGURAT_AVX2
  __attribute__((target("avx2"))) void fill_avx2(std::uint64_t* out, std::size_t rounds) {
#define CHIBSEL_LOAD(p) _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p))
#define CHIBSEL_STORE(p, v) _mm256_storeu_si256(reinterpret_cast<__m256i*>(p), v)
#define CHIBSEL_ROTL(x, k) _mm256_or_si256(_mm256_slli_epi64(x, k), _mm256_srli_epi64(x, 64 - (k)))
    for (std::size_t h = 0; h < kLanes; h += 4) {
      __m256i a = CHIBSEL_LOAD(a_ + h);
      __m256i b = CHIBSEL_LOAD(b_ + h);
      __m256i c = CHIBSEL_LOAD(c_ + h);
      __m256i d = CHIBSEL_LOAD(d_ + h);
      for (std::size_t j = 0; j < rounds; ++j) {
        __m256i m = _mm256_add_epi64(_mm256_slli_epi64(b, 2), b);
        m = CHIBSEL_ROTL(m, 7);
        m = _mm256_add_epi64(_mm256_slli_epi64(m, 3), m);
        CHIBSEL_STORE(out + j * kLanes + h, m);
        const __m256i t = _mm256_slli_epi64(b, 17);
        c = _mm256_xor_si256(c, a);
        d = _mm256_xor_si256(d, b);
        b = _mm256_xor_si256(b, c);
        a = _mm256_xor_si256(a, d);
        c = _mm256_xor_si256(c, t);
        d = CHIBSEL_ROTL(d, 45);
      }
      CHIBSEL_STORE(a_ + h, a);
      CHIBSEL_STORE(b_ + h, b);
      CHIBSEL_STORE(c_ + h, c);
      CHIBSEL_STORE(d_ + h, d);
    }
#undef CHIBSEL_ROTL
#undef CHIBSEL_STORE
#undef CHIBSEL_LOAD
  }
#endif

 private:
  std::uint64_t a_[kLanes]{};
  std::uint64_t b_[kLanes]{};
  std::uint64_t c_[kLanes]{};
  std::uint64_t d_[kLanes]{};
};

/// xoshiro256** seeded from splitmix64. Satisfies UniformRandomBitGenerator.
/// normal() draws from its own block-buffered lane generators; operator() and
/// uniform() from the scalar stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_step(sm);
    lanes_.seed(sm);
    pos_ = kNormalBlock;
  }

  /// Overwrites the scalar stream state (zero state is invalid) and leaves the normal stream as is.
  void set_state(const std::array<std::uint64_t, 4>& state) {
    for (std::size_t i = 0; i < 4; ++i) s_[i] = state[i];
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
  }

  /// Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal (ziggurat).
  double normal() {
    if (pos_ == kNormalBlock) refill();
    return normals_[pos_++];
  }

  /// Same values as n successive normal() calls.
  void fill_normal(double* out, std::size_t n) {
    while (n > 0) {
      if (pos_ == kNormalBlock) {
        if (n >= kNormalBlock) {
          generate_block(out);
          out += kNormalBlock;
          n -= kNormalBlock;
          continue;
        }
        refill();
      }
      const std::size_t take = std::min(n, kNormalBlock - pos_);
      std::memcpy(out, normals_ + pos_, take * sizeof(double));
      pos_ += take;
      out += take;
      n -= take;
    }
  }

 private:
  static constexpr std::size_t kNormalBlock = 2 * detail::kZigguratWords;

  void refill() {
    generate_block(normals_);
    pos_ = 0;
  }

  // Vectorizable fast path first, then rejected outputs in index order.
  void generate_block(double* out) {
    lanes_.fill(words_, detail::kZigguratWords / XoshiroLanes::kLanes);
    detail::RejectMask reject;
    detail::ziggurat_fast(words_, out, reject);
    for (std::size_t j = 0; j < reject.size(); ++j) {
      for (std::uint64_t bits = reject[j]; bits != 0; bits &= bits - 1) {
        const std::size_t i = 64 * j + static_cast<std::size_t>(std::countr_zero(bits));
        const std::int32_t hz = detail::zig_word_half(words_[i / 2], i % 2);
        out[i] = normal_slow(hz, static_cast<std::uint32_t>(hz) & 127u);
      }
    }
  }

  [[gnu::noinline]] double normal_slow(std::int32_t hz, std::size_t iz) {
    const auto& z = detail::ziggurat_tables();
    constexpr double r = detail::ZigguratTables::r;
    for (;;) {
      const double x = hz * z.w[iz];
      if (iz == 0) {
        double a;
        double b;
        do {
          a = -std::log(uniform()) / r;
          b = -std::log(uniform());
        } while (b + b < a * a);
        return hz > 0 ? r + a : -r - a;
      }
      if (z.f[iz] + uniform() * (z.f[iz - 1] - z.f[iz]) < std::exp(-0.5 * x * x)) return x;
      hz = detail::zig_word_half((*this)(), 0);
      iz = static_cast<std::uint32_t>(hz) & 127u;
      if (detail::zig_magnitude(hz) < z.k[iz]) return hz * z.w[iz];
    }
  }

  std::uint64_t s_[4]{};
  XoshiroLanes lanes_;
  std::uint64_t words_[detail::kZigguratWords]{};
  double normals_[kNormalBlock]{};
  std::size_t pos_ = kNormalBlock;
};

/// Gamma(shape, rate) variate by the Marsaglia-Tsang squeeze method. Shapes
/// below 1 draw X ~ Gamma(shape + 1) and return X * U^(1/shape).
inline double sample_gamma(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("sample_gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

}  // namespace chibsel
