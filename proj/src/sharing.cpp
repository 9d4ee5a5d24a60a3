#include "fourpc/sharing.hpp"

namespace fourpc {

bool rep_structure_valid(const RepShares& sh) {
    // Replication equalities from the share table.
    if (sh[0].s != sh[3].s || sh[1].s != sh[2].s) return false;
    if (sh[0].sp != sh[2].sp || sh[1].sp != sh[3].sp) return false;
    u64 ref = reconstruct_pair(0, sh[0], 1, sh[1]);
    for (int a = 0; a < kNumParties; ++a)
        for (int b = a + 1; b < kNumParties; ++b)
            if (reconstruct_pair(a, sh[a], b, sh[b]) != ref) return false;
    return true;
}

AddShare convert_rep_to_add(PartyContext& ctx, const RepShare& x) {
    if (!ctx.is_low_pair()) throw std::logic_error("convert_rep_to_add: caller must be P0 or P1");
    u64 r = ctx.pair.next();
    return {ctx.id == 0 ? x.s + r : x.s - r, ctx.id};
}

RepShare convert_add_to_rep(PartyContext& ctx, u8 tag, const AddShare& x) {
    if (ctx.is_low_pair()) {
        u64 r01 = ctx.pair.next();
        u64 piece = x.piece;
        u64 prime = ctx.id == 0 ? piece - r01 : piece + r01;
        if (ctx.id == 0) {
            ctx.send_u64(3, tag, piece);
            ctx.send_u64(2, tag, prime);
        } else {
            ctx.send_u64(2, tag, piece);
            ctx.send_u64(3, tag, prime);
        }
        return {piece, prime};
    }
    if (ctx.id == 2) {
        u64 prime = ctx.recv_u64(0, tag);
        u64 piece = ctx.recv_u64(1, tag);
        return {piece, prime};
    }
    u64 piece = ctx.recv_u64(0, tag);
    u64 prime = ctx.recv_u64(1, tag);
    return {piece, prime};
}

u64 open_rep(PartyContext& ctx, u8 tag, const RepShare& x) {
    // P0<->P2 and P1<->P3 exchange plain pieces; every party ends with x.
    int peer = ctx.id ^ 2;
    ctx.send_u64(peer, tag, x.s);
    u64 other = ctx.recv_u64(peer, tag);
    return x.s + other;
}

double chi_square_top8(std::span<const u64> samples) {
    u64 bins[256] = {};
    for (u64 s : samples) bins[s >> 56] += 1;
    double expected = static_cast<double>(samples.size()) / 256.0;
    double chi = 0;
    for (u64 b : bins) {
        double d = static_cast<double>(b) - expected;
        chi += d * d / expected;
    }
    return chi;
}

}  // namespace fourpc
