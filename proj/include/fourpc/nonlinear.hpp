#pragma once

#include <span>
#include <vector>

#include "fourpc/linear.hpp"
#include "fourpc/sharing.hpp"
#include "fourpc/transport.hpp"

namespace fourpc {

// Sign-test configuration. key_bits is the window width of the bit
// decomposition; key_frac the fractional bits kept. The default mirrors the
// evaluated 13-bit (11 integer + 2 fraction) configuration with the 16381
// zero-test field. wide() keeps full fractional precision; it is what the
// GNN pipeline and the bounding-power protocol run on, where key-grid sign
// quantization is not affordable.
//
// Admissible inputs are multiples of 2^(frac_bits-key_frac) with key
// magnitude at most 2^(key_bits-1) - 1.
struct DreluParams {
    int key_bits = 13;
    int key_frac = 2;
    u64 prime = 16381;  // must exceed 2 * 2^key_bits - 2

    static DreluParams paper() { return {13, 2, 16381}; }
    static DreluParams wide(const RingParams& rp) { return {31, rp.frac_bits, 4294967311ULL}; }

    int prime_bits() const {
        int b = 0;
        while ((prime >> b) != 0) ++b;
        return b;
    }
    int slots() const { return 4 * key_bits; }
};

// Iteration counts for the approximate protocols.
struct IterParams {
    int softmax_t = 8;
    int invsqrt_r = 4;
    int pow_cmin = -8;  // candidate exponent range for the bounding power
    int pow_cmax = 8;
};

// DReLU: replicated sharing of 1 if x > 0 else 0 (integer-valued output).
// Exact for every admissible input and every share randomness.
std::vector<RepShare> drelu_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
                                const DreluParams& dp);
RepShare drelu(PartyContext& ctx, const RepShare& x, const DreluParams& dp = {});

// ReLU(x) = x * DReLU(x). Returns values and the sign masks (the masks are
// reused by the backward pass).
struct ReluResult {
    std::vector<RepShare> value;
    std::vector<RepShare> mask;
};
ReluResult relu_vec(PartyContext& ctx, std::span<const RepShare> x, const DreluParams& dp,
                    u8 tag = TAG_RELU);

// Row-wise ODE softmax: f(0) = 1/d, t refinement steps of
// f += (x - <x,f>1) (.) f / t, output f(1).
SecureTensor softmax_rows(PartyContext& ctx, const SecureTensor& x, int t, u8 tag = TAG_SOFTMAX);

// Bounding power: alpha with 2^alpha <= value < 2^(alpha+1), plus the
// one-hot selector over the candidate range. Positive inputs only.
struct PowResult {
    std::vector<RepShare> alpha;                 // integer-valued sharing
    std::vector<std::vector<RepShare>> onehot;   // [input][c - cmin]
    int cmin = 0, cmax = 0;
};
PowResult pow_bound_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
                        const IterParams& ip);
RepShare pow_bound(PartyContext& ctx, const RepShare& x, const IterParams& ip = {});

// a / b for b > 0: normalize b into [0.5, 1) with the bounding power, then
// y0 = 2.9142 - 2b and two Newton refinements: a y0 (1+e0)(1+e1).
std::vector<RepShare> divide_vec(PartyContext& ctx, std::span<const RepShare> a,
                                 std::span<const RepShare> b, const IterParams& ip,
                                 u8 tag = TAG_DIV);
RepShare divide(PartyContext& ctx, const RepShare& a, const RepShare& b,
                const IterParams& ip = {});

// 1/sqrt(x) for x > 0: y0 = 2^-ceil(alpha/2), then r iterations of
// y <- y/2 (3 - x y^2).
std::vector<RepShare> inv_sqrt_vec(PartyContext& ctx, std::span<const RepShare> x,
                                   const IterParams& ip, u8 tag = TAG_INVSQRT);
RepShare inv_sqrt(PartyContext& ctx, const RepShare& x, const IterParams& ip = {});

// log2(x) for x > 0: alpha + series in x 2^-alpha - 1. Used for the
// cross-entropy loss report.
std::vector<RepShare> log2_vec(PartyContext& ctx, std::span<const RepShare> x,
                               const IterParams& ip, u8 tag = TAG_LOG);

}  // namespace fourpc
