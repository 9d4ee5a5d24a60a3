#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fourpc {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// Global arithmetic parameters. Defaults follow the evaluated configuration:
// 64-bit ring, 20 fractional bits, 31-bit value precision, prime 16381 for
// the small zero-test field.
struct RingParams {
    int ell = 64;        // ring bit width (fixed to 64 in this implementation)
    int frac_bits = 20;  // l_t
    int lx = 31;         // value precision bits
    u64 prime = 16381;   // zero-test field modulus (must exceed 2^key_bits + 3)
};

inline u64 ring_mask(int bits) {
    return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1ULL);
}

// Two's-complement interpretation of a 64-bit ring element.
inline i64 to_signed(u64 x) { return static_cast<i64>(x); }
inline u64 from_signed(i64 x) { return static_cast<u64>(x); }

// Fixed-point encoding: round(v * 2^frac_bits), half away from zero.
// Negative values occupy the top of the ring.
inline u64 fp_encode(double v, int frac_bits, int lx = 31) {
    double scaled = std::ldexp(v, frac_bits);
    double limit = std::ldexp(1.0, lx);
    if (!(std::fabs(scaled) < limit))
        throw std::range_error("fp_encode: value outside representable range");
    double rounded = scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    return from_signed(static_cast<i64>(rounded));
}

inline double fp_decode(u64 raw, int frac_bits) {
    return std::ldexp(static_cast<double>(to_signed(raw)), -frac_bits);
}

// Unchecked variant for protocol-internal public coefficients, which may
// exceed the data value range.
inline u64 fp_encode_coeff(double v, int frac_bits) {
    double scaled = std::ldexp(v, frac_bits);
    double rounded = scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    return from_signed(static_cast<i64>(rounded));
}

// Probabilistic truncation roles (SecureML-style split over an additive pair).
// share0: floor of the share as an unsigned residue.
// share1: 2^64 - ((2^64 - x) >> k), i.e. negate, floor-shift, negate.
// Reconstruction of a pair truncated with complementary roles equals
// value >> k up to one raw unit, except with probability ~|value|/2^64.
enum class TruncRole { share0, share1 };

inline u64 trunc_prob(u64 x, int k, TruncRole role) {
    assert(k >= 0 && k < 64);
    if (k == 0) return x;
    if (role == TruncRole::share0) return x >> k;
    return ~((~x + 1ULL) >> k) + 1ULL;
}

// trc_bar: drop the low k1 bits and the high k2 bits; result lives in
// Z_{2^{64-k1-k2}}.
inline u64 trc_bar(u64 x, int k1, int k2, int ell = 64) {
    if (k1 + k2 > ell) throw std::invalid_argument("trc_bar: k1 + k2 > ell");
    u64 v = x & ring_mask(ell);
    v >>= k1;
    return v & ring_mask(ell - k1 - k2);
}

}  // namespace fourpc
