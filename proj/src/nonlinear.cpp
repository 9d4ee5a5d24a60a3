#include "fourpc/nonlinear.hpp"

#include <algorithm>

namespace fourpc {

namespace {

inline u64 mulmod(u64 a, u64 b, u64 p) { return static_cast<u64>(u128(a) * b % p); }

inline u64 signed_mod(i64 v, u64 p) {
    i64 m = v % static_cast<i64>(p);
    if (m < 0) m += static_cast<i64>(p);
    return static_cast<u64>(m);
}

// Slot test constants: for each window level j in [0, key_bits) the parties
// emit four masked values testing the integer identity
//   alpha_j + beta_j' = c,   c in {1, 2, 2^W + 1, 2^W + 2},
// which together decide (window_j of the tested value) in {1, 2} exactly.
// beta is nudged from 2^W - 1 to -1 on P1's side so no candidate aliases a
// multiple of the field modulus.
struct SlotLayout {
    int levels;
    int slots;
    std::array<i64, 4> offsets;
    explicit SlotLayout(const DreluParams& dp) : levels(dp.key_bits), slots(dp.slots()) {
        i64 w = i64(1) << dp.key_bits;
        offsets = {1, 2, w + 1, w + 2};
    }
};

}  // namespace

std::vector<RepShare> drelu_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
                                const DreluParams& dp) {
    OpScope scope(ctx, tag);
    const size_t n = x.size();
    const int frac = ctx.params.frac_bits;
    const int s = frac - dp.key_frac;
    const int W = dp.key_bits;
    const u64 p = dp.prime;
    // Alias-freedom of the slot tests needs p > 2^(W+1) - 4 (worst residual
    // range after the beta nudge).
    if (p <= (2ULL << W) - 4)
        throw std::invalid_argument("drelu: prime too small for the key width");
    const u64 wmask = ring_mask(W);
    const SlotLayout layout(dp);
    const int pbits = dp.prime_bits();
    const int tester = 2 + static_cast<int>(ctx.drelu_calls++ % 2);
    std::vector<RepShare> out(n);

    if (ctx.is_low_pair()) {
        std::vector<u64> wslots(n * layout.slots);
        std::vector<u64> sign_bits(n);
        for (size_t e = 0; e < n; ++e) {
            u64 b = ctx.pair.next_bit();
            sign_bits[e] = b;
            u64 share = b ? ~x[e].s + 1 : x[e].s;
            if (b && ctx.id == 0) share += u64(1) << s;  // strictness shift: test -x + 1key
            // Deterministic key extraction: admissible inputs have zero low
            // bits, so P1 can cancel the borrow exactly from its own share.
            u64 key = share >> s;
            if (ctx.id == 1 && s > 0 && (share & ring_mask(s)) != 0) key += 1;

            u64* slot = &wslots[e * layout.slots];
            for (int j = 0; j < layout.levels; ++j) {
                u64 window = (key >> j) & wmask;
                i64 beta = static_cast<i64>(window);
                if (ctx.id == 1 && window == wmask) beta = -1;  // alias nudge
                for (int o = 0; o < 4; ++o) {
                    u64 r = ctx.pair.next_unit_mod(p);
                    u64 v = ctx.id == 0 ? window % p : signed_mod(beta - layout.offsets[o], p);
                    slot[j * 4 + o] = mulmod(r, v, p);
                }
            }
            // Both parties apply the same seed-derived permutation.
            for (int i = layout.slots - 1; i > 0; --i) {
                int k = static_cast<int>(ctx.pair.next_below(static_cast<u64>(i) + 1));
                std::swap(slot[i], slot[k]);
            }
        }
        ctx.send_bytes(tester, tag, pack_bits(wslots, pbits));

        // Phase 3: additive sharing of the zero-test outcome comes back.
        std::vector<u64> dshare = ctx.recv_u64s(tester, tag, n);
        std::vector<u64> piece(n), prime(n);
        for (size_t e = 0; e < n; ++e) {
            u64 b = sign_bits[e];
            u64 flip = b ? ~u64(0) : u64(1);  // 1 - 2b
            u64 dprime = flip * dshare[e];
            if (ctx.id == 0) dprime += b;
            u64 r01a = ctx.pair.next();
            u64 r01b = ctx.pair.next();
            if (ctx.id == 0) {
                piece[e] = dprime - r01a;
                prime[e] = dprime - r01a + r01b;
            } else {
                piece[e] = dprime + r01a;
                prime[e] = dprime + r01a - r01b;
            }
            out[e] = {piece[e], prime[e]};
        }
        // Phase 4 resharing, exactly as in the replicated-share generation.
        if (ctx.id == 0) {
            ctx.send_u64s(3, tag, piece);
            ctx.send_u64s(2, tag, prime);
        } else {
            ctx.send_u64s(2, tag, piece);
            ctx.send_u64s(3, tag, prime);
        }
        return out;
    }

    // P2 / P3.
    if (ctx.id == tester) {
        std::vector<u8> w0b = ctx.recv_bytes(0, tag);
        std::vector<u8> w1b = ctx.recv_bytes(1, tag);
        std::vector<u64> w0 = unpack_bits(w0b, pbits, n * layout.slots);
        std::vector<u64> w1 = unpack_bits(w1b, pbits, n * layout.slots);
        std::vector<u64> to_p0(n), to_p1(n);
        for (size_t e = 0; e < n; ++e) {
            u64 dd = 0;
            for (int k = 0; k < layout.slots; ++k)
                if ((w0[e * layout.slots + k] + w1[e * layout.slots + k]) % p == 0) dd = 1;
            u64 r = ctx.priv.next();
            to_p0[e] = r;
            to_p1[e] = dd - r;
        }
        ctx.send_u64s(0, tag, to_p0);
        ctx.send_u64s(1, tag, to_p1);
    }
    std::vector<u64> from_p0 = ctx.recv_u64s(0, tag, n);
    std::vector<u64> from_p1 = ctx.recv_u64s(1, tag, n);
    for (size_t e = 0; e < n; ++e)
        out[e] = ctx.id == 2 ? RepShare{from_p1[e], from_p0[e]} : RepShare{from_p0[e], from_p1[e]};
    return out;
}

RepShare drelu(PartyContext& ctx, const RepShare& x, const DreluParams& dp) {
    return drelu_vec(ctx, TAG_DRELU, std::span<const RepShare>(&x, 1), dp)[0];
}

ReluResult relu_vec(PartyContext& ctx, std::span<const RepShare> x, const DreluParams& dp,
                    u8 tag) {
    OpScope scope(ctx, tag);
    ReluResult res;
    res.mask = drelu_vec(ctx, tag, x, dp);
    res.value.resize(x.size());
    mult_vec(ctx, tag, x, res.mask, res.value, 0);  // 0/1 mask: no rescale
    return res;
}

SecureTensor softmax_rows(PartyContext& ctx, const SecureTensor& x, int t, u8 tag) {
    OpScope scope(ctx, tag);
    if (x.cols == 0 || t < 1) throw std::invalid_argument("softmax: empty input or t < 1");
    const int frac = x.frac_bits;
    const size_t rows = x.rows, d = x.cols;

    SecureTensor xs(rows, d, frac);
    u64 inv_t = fp_encode(1.0 / t, frac);
    for (size_t i = 0; i < x.v.size(); ++i) xs.v[i] = rep_scale_fp(ctx.id, x.v[i], inv_t, frac);

    SecureTensor f(rows, d, frac);
    u64 inv_d = fp_encode(1.0 / static_cast<double>(d), frac);
    for (auto& sh : f.v) sh = share_public(ctx.id, inv_d);

    for (int step = 0; step < t; ++step) {
        SecureTensor ip = hadamard(ctx, xs, f, tag);  // inner product, summed per row
        SecureTensor abc(rows, d, frac);
        for (size_t r = 0; r < rows; ++r) {
            RepShare acc{0, 0};
            for (size_t c = 0; c < d; ++c) acc = rep_add(acc, ip.at(r, c));
            for (size_t c = 0; c < d; ++c) abc.at(r, c) = acc;
        }
        SecureTensor b = hadamard(ctx, abc, f, tag);
        SecureTensor cmat = hadamard(ctx, xs, f, tag);
        for (size_t i = 0; i < f.v.size(); ++i)
            f.v[i] = rep_add(f.v[i], rep_sub(cmat.v[i], b.v[i]));
    }
    return f;
}

PowResult pow_bound_vec(PartyContext& ctx, u8 tag, std::span<const RepShare> x,
                        const IterParams& ip) {
    OpScope scope(ctx, tag);
    const int frac = ctx.params.frac_bits;
    const size_t n = x.size();
    const int C = ip.pow_cmax - ip.pow_cmin + 1;
    DreluParams wide = DreluParams::wide(ctx.params);

    // Parallel exact comparisons [x >= 2^c] = 1 - drelu(2^c - x).
    std::vector<RepShare> diffs(n * C);
    for (size_t e = 0; e < n; ++e)
        for (int c = 0; c < C; ++c) {
            u64 thresh = fp_encode_coeff(std::ldexp(1.0, ip.pow_cmin + c), frac);
            diffs[e * C + c] = rep_add_public(ctx.id, rep_neg(x[e]), thresh);
        }
    std::vector<RepShare> d = drelu_vec(ctx, tag, diffs, wide);

    PowResult res;
    res.cmin = ip.pow_cmin;
    res.cmax = ip.pow_cmax;
    res.alpha.resize(n);
    res.onehot.assign(n, std::vector<RepShare>(C));
    for (size_t e = 0; e < n; ++e) {
        std::vector<RepShare> ge(C);
        RepShare acc{0, 0};
        for (int c = 0; c < C; ++c) {
            ge[c] = rep_add_public(ctx.id, rep_neg(d[e * C + c]), 1);
            acc = rep_add(acc, ge[c]);
        }
        res.alpha[e] = rep_add_public(ctx.id, acc, from_signed(ip.pow_cmin - 1));
        for (int c = 0; c < C; ++c)
            res.onehot[e][c] = (c + 1 < C) ? rep_sub(ge[c], ge[c + 1]) : ge[c];
    }
    return res;
}

RepShare pow_bound(PartyContext& ctx, const RepShare& x, const IterParams& ip) {
    return pow_bound_vec(ctx, TAG_POW, std::span<const RepShare>(&x, 1), ip).alpha[0];
}

namespace {

// Inner product of a one-hot sharing with public fixed-point coefficients:
// integer 0/1 shares times raw constants, no rescale needed.
RepShare onehot_dot(std::span<const RepShare> onehot, std::span<const u64> coeff_raw) {
    RepShare acc{0, 0};
    for (size_t c = 0; c < onehot.size(); ++c)
        acc = rep_add(acc, rep_scale_int(onehot[c], coeff_raw[c]));
    return acc;
}

}  // namespace

std::vector<RepShare> divide_vec(PartyContext& ctx, std::span<const RepShare> a,
                                 std::span<const RepShare> b, const IterParams& ip, u8 tag) {
    OpScope scope(ctx, tag);
    const int frac = ctx.params.frac_bits;
    const size_t n = b.size();
    if (a.size() != n) throw std::invalid_argument("divide: operand size mismatch");

    PowResult pw = pow_bound_vec(ctx, tag, b, ip);
    const int C = pw.cmax - pw.cmin + 1;
    std::vector<u64> coeff(C);
    for (int c = 0; c < C; ++c) coeff[c] = fp_encode_coeff(std::ldexp(1.0, -(pw.cmin + c) - 1), frac);

    std::vector<RepShare> m(n), bh(n), ah(n);
    for (size_t e = 0; e < n; ++e) m[e] = onehot_dot(pw.onehot[e], coeff);
    mult_vec(ctx, tag, b, m, bh, frac);
    mult_vec(ctx, tag, a, m, ah, frac);

    const u64 enc_1 = fp_encode(1.0, frac);
    const u64 enc_c0 = fp_encode(2.9142, frac);
    std::vector<RepShare> y0(n), e0(n), e1(n), t(n);
    for (size_t e = 0; e < n; ++e)
        y0[e] = rep_add_public(ctx.id, rep_scale_int(bh[e], from_signed(-2)), enc_c0);  // 2.9142 - 2b
    mult_vec(ctx, tag, bh, y0, e0, frac);
    for (size_t e = 0; e < n; ++e) e0[e] = rep_add_public(ctx.id, rep_neg(e0[e]), enc_1);
    mult_vec(ctx, tag, e0, e0, e1, frac);
    mult_vec(ctx, tag, ah, y0, t, frac);
    for (size_t e = 0; e < n; ++e) e0[e] = rep_add_public(ctx.id, e0[e], enc_1);
    mult_vec(ctx, tag, t, e0, t, frac);
    for (size_t e = 0; e < n; ++e) e1[e] = rep_add_public(ctx.id, e1[e], enc_1);
    mult_vec(ctx, tag, t, e1, t, frac);
    return t;
}

RepShare divide(PartyContext& ctx, const RepShare& a, const RepShare& b, const IterParams& ip) {
    return divide_vec(ctx, std::span<const RepShare>(&a, 1), std::span<const RepShare>(&b, 1),
                      ip)[0];
}

std::vector<RepShare> inv_sqrt_vec(PartyContext& ctx, std::span<const RepShare> x,
                                   const IterParams& ip, u8 tag) {
    OpScope scope(ctx, tag);
    const int frac = ctx.params.frac_bits;
    const size_t n = x.size();

    PowResult pw = pow_bound_vec(ctx, tag, x, ip);
    const int C = pw.cmax - pw.cmin + 1;
    // y0 = 2^-ceil(alpha/2); round-half-up keeps x y0^2 in (0, 2) on both
    // parities so the Newton iteration never crosses zero.
    std::vector<u64> coeff(C);
    for (int c = 0; c < C; ++c) {
        int cc = pw.cmin + c;
        int half_up = (cc >= 0) ? (cc + 1) / 2 : -((-cc) / 2);
        coeff[c] = fp_encode_coeff(std::ldexp(1.0, -half_up), frac);
    }
    std::vector<RepShare> y(n);
    for (size_t e = 0; e < n; ++e) y[e] = onehot_dot(pw.onehot[e], coeff);

    const u64 enc_3 = fp_encode(3.0, frac);
    std::vector<RepShare> t1(n), t2(n);
    for (int it = 0; it < ip.invsqrt_r; ++it) {
        mult_vec(ctx, tag, y, y, t1, frac);
        mult_vec(ctx, tag, x, t1, t2, frac);
        for (size_t e = 0; e < n; ++e) t2[e] = rep_add_public(ctx.id, rep_neg(t2[e]), enc_3);
        mult_vec(ctx, tag, y, t2, y, frac + 1);  // folds the division by two
    }
    return y;
}

RepShare inv_sqrt(PartyContext& ctx, const RepShare& x, const IterParams& ip) {
    return inv_sqrt_vec(ctx, std::span<const RepShare>(&x, 1), ip)[0];
}

std::vector<RepShare> log2_vec(PartyContext& ctx, std::span<const RepShare> x,
                               const IterParams& ip, u8 tag) {
    OpScope scope(ctx, tag);
    const int frac = ctx.params.frac_bits;
    const size_t n = x.size();

    IterParams lp = ip;
    lp.pow_cmin = -(frac - 2);  // probabilities may be tiny
    lp.pow_cmax = 2;
    PowResult pw = pow_bound_vec(ctx, tag, x, lp);
    const int C = lp.pow_cmax - lp.pow_cmin + 1;
    std::vector<u64> coeff(C);
    for (int c = 0; c < C; ++c) coeff[c] = fp_encode_coeff(std::ldexp(1.0, -(lp.pow_cmin + c)), frac);

    const u64 enc_1 = fp_encode(1.0, frac);
    std::vector<RepShare> m(n), z(n), z2(n), z3(n), out(n);
    for (size_t e = 0; e < n; ++e) m[e] = onehot_dot(pw.onehot[e], coeff);
    mult_vec(ctx, tag, x, m, z, frac);
    for (size_t e = 0; e < n; ++e) z[e] = rep_add_public(ctx.id, z[e], ~enc_1 + 1);  // x 2^-a - 1
    mult_vec(ctx, tag, z, z, z2, frac);
    mult_vec(ctx, tag, z2, z, z3, frac);
    const u64 c1 = fp_encode(1.0 / std::log(2.0), frac);
    const u64 c2 = fp_encode(-0.5 / std::log(2.0), frac);
    const u64 c3 = fp_encode(1.0 / (3.0 * std::log(2.0)), frac);
    for (size_t e = 0; e < n; ++e) {
        RepShare series = rep_add(rep_add(rep_scale_fp(ctx.id, z[e], c1, frac),
                                          rep_scale_fp(ctx.id, z2[e], c2, frac)),
                                  rep_scale_fp(ctx.id, z3[e], c3, frac));
        RepShare alpha_fp = rep_scale_int(pw.alpha[e], u64(1) << frac);
        out[e] = rep_add(alpha_fp, series);
    }
    return out;
}

}  // namespace fourpc
