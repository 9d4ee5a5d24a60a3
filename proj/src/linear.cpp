#include "fourpc/linear.hpp"

namespace fourpc {

namespace {

// Mask-and-exchange step shared by mult, hadamard and matmult. `s` and `sp`
// hold the local cross terms; they are replaced by the combined output
// pieces.
void mask_exchange_combine(PartyContext& ctx, u8 tag, std::vector<u64>& s, std::vector<u64>& sp) {
    const size_t n = s.size();
    const bool plus = (ctx.id == 1 || ctx.id == 3);
    for (size_t i = 0; i < n; ++i) {
        u64 r = ctx.pair.next();
        u64 rp = ctx.pair.next();
        if (plus) {
            s[i] += r;
            sp[i] += rp;
        } else {
            s[i] -= r;
            sp[i] -= rp;
        }
    }
    // P0: s->P3, sp->P2;  P1: s->P2, sp->P3;
    // P2: s->P1, sp->P0;  P3: s->P0, sp->P1.
    static constexpr int s_dst[4] = {3, 2, 1, 0};
    static constexpr int sp_dst[4] = {2, 3, 0, 1};
    ctx.send_u64s(s_dst[ctx.id], tag, s);
    ctx.send_u64s(sp_dst[ctx.id], tag, sp);
    std::vector<u64> s_in = ctx.recv_u64s(s_dst[ctx.id], tag, n);
    std::vector<u64> sp_in = ctx.recv_u64s(sp_dst[ctx.id], tag, n);
    for (size_t i = 0; i < n; ++i) {
        s[i] += s_in[i];
        sp[i] += sp_in[i];
    }
}

}  // namespace

void mult_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
              std::span<const RepShare> y, std::span<RepShare> out, int trunc_bits) {
    OpScope scope(ctx, tag);
    const size_t n = x.size();
    if (y.size() != n || out.size() != n)
        throw std::invalid_argument("mult_vec: operand size mismatch");
    std::vector<u64> s(n), sp(n);
    for (size_t i = 0; i < n; ++i) {
        s[i] = x[i].s * y[i].sp;
        sp[i] = x[i].sp * y[i].s;
    }
    mask_exchange_combine(ctx, tag, s, sp);
    for (size_t i = 0; i < n; ++i) out[i] = rep_trunc(ctx.id, {s[i], sp[i]}, trunc_bits);
}

RepShare mult(PartyContext& ctx, u8 tag, const RepShare& x, const RepShare& y, int trunc_bits) {
    RepShare out;
    mult_vec(ctx, tag, std::span<const RepShare>(&x, 1), std::span<const RepShare>(&y, 1),
             std::span<RepShare>(&out, 1), trunc_bits);
    return out;
}

SecureTensor hadamard(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y, u8 tag) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw std::invalid_argument("hadamard: shape mismatch");
    SecureTensor z(x.rows, x.cols, x.frac_bits);
    mult_vec(ctx, tag, x.v, y.v, z.v, x.frac_bits);
    return z;
}

namespace {

enum class MulMode { plain, transpose_a, transpose_b };

// z += a * b over the 2^64 ring, choosing the (s, sp) cross pairing.
void accumulate_product(const SecureTensor& a, const SecureTensor& b, bool a_plain_b_prime,
                        std::vector<u64>& out, MulMode mode) {
    auto aval = [&](const RepShare& sh) { return a_plain_b_prime ? sh.s : sh.sp; };
    auto bval = [&](const RepShare& sh) { return a_plain_b_prime ? sh.sp : sh.s; };
    if (mode == MulMode::transpose_b) {
        size_t cols = b.rows;
        for (size_t i = 0; i < a.rows; ++i)
            for (size_t j = 0; j < cols; ++j) {
                u64 acc = 0;
                for (size_t k = 0; k < a.cols; ++k) acc += aval(a.at(i, k)) * bval(b.at(j, k));
                out[i * cols + j] += acc;
            }
        return;
    }
    bool ta = mode == MulMode::transpose_a;
    size_t rows = ta ? a.cols : a.rows;
    size_t inner = ta ? a.rows : a.cols;
    size_t cols = b.cols;
    for (size_t i = 0; i < rows; ++i)
        for (size_t k = 0; k < inner; ++k) {
            u64 lhs = aval(ta ? a.at(k, i) : a.at(i, k));
            const RepShare* brow = &b.at(k, 0);
            u64* orow = &out[i * cols];
            for (size_t j = 0; j < cols; ++j) orow[j] += lhs * bval(brow[j]);
        }
}

SecureTensor matmult_impl(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y, u8 tag,
                          MulMode mode) {
    size_t inner = mode == MulMode::transpose_a ? x.rows : x.cols;
    size_t rows = mode == MulMode::transpose_a ? x.cols : x.rows;
    size_t y_inner = mode == MulMode::transpose_b ? y.cols : y.rows;
    size_t cols = mode == MulMode::transpose_b ? y.rows : y.cols;
    if (inner != y_inner) throw std::invalid_argument("matmult: inner dimension mismatch");
    const size_t n = rows * cols;
    std::vector<u64> s(n, 0), sp(n, 0);
    accumulate_product(x, y, true, s, mode);
    accumulate_product(x, y, false, sp, mode);
    mask_exchange_combine(ctx, tag, s, sp);
    SecureTensor z(rows, cols, x.frac_bits);
    for (size_t i = 0; i < n; ++i) z.v[i] = rep_trunc(ctx.id, {s[i], sp[i]}, x.frac_bits);
    return z;
}

}  // namespace

SecureTensor matmult(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y, u8 tag) {
    return matmult_impl(ctx, x, y, tag, MulMode::plain);
}

SecureTensor matmult_at_b(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                          u8 tag) {
    return matmult_impl(ctx, x, y, tag, MulMode::transpose_a);
}

SecureTensor matmult_a_bt(PartyContext& ctx, const SecureTensor& x, const SecureTensor& y,
                          u8 tag) {
    return matmult_impl(ctx, x, y, tag, MulMode::transpose_b);
}

}  // namespace fourpc
