#pragma once

#include <span>
#include <vector>

#include "fourpc/sharing.hpp"
#include "fourpc/transport.hpp"

namespace fourpc {

// Row-major replicated-shared matrix. All parties agree on shape and
// fractional precision.
struct SecureTensor {
    size_t rows = 0, cols = 0;
    int frac_bits = 20;
    std::vector<RepShare> v;

    SecureTensor() = default;
    SecureTensor(size_t r, size_t c, int fb) : rows(r), cols(c), frac_bits(fb), v(r * c) {}
    RepShare& at(size_t r, size_t c) { return v[r * cols + c]; }
    const RepShare& at(size_t r, size_t c) const { return v[r * cols + c]; }
    size_t size() const { return v.size(); }
};

// Secure multiplication: each party masks its two local cross terms with a
// pair-seeded random, sends them to its mirror parties, and sums what it
// receives. The result is truncated locally by trunc_bits so a product of
// two frac_bits inputs comes back at frac_bits.
//
// trunc_bits = 0 multiplies by an integer-valued sharing (e.g. a 0/1 sign
// bit) without rescaling.
void mult_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
              std::span<const RepShare> y, std::span<RepShare> out, int trunc_bits);

RepShare mult(PartyContext& ctx, u8 tag, const RepShare& x, const RepShare& y, int trunc_bits);

SecureTensor hadamard(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                      u8 tag = TAG_HAD);

// Shared matrix product (a x b) * (b x c) -> (a x c). Cross-term matrix
// products are computed locally at full ring width, masked with one stream
// element per output entry, exchanged in one envelope per direction, and
// truncated after accumulation.
SecureTensor matmult(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                     u8 tag = TAG_MATMULT);

// X^T * Y and X * Y^T without materializing the transpose.
SecureTensor matmult_at_b(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                          u8 tag = TAG_MATMULT);
SecureTensor matmult_a_bt(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                          u8 tag = TAG_MATMULT);

}  // namespace fourpc
