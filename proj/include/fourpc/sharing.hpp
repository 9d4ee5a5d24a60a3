#pragma once

#include <array>
#include <span>
#include <vector>

#include "fourpc/prg.hpp"
#include "fourpc/ring.hpp"
#include "fourpc/transport.hpp"

namespace fourpc {

// One party's piece of a (2,2)-additive sharing: [x]_0 + [x]_1 = x mod 2^64.
struct AddShare {
    u64 piece = 0;
    int owner = 0;  // 0 or 1
};

// One party's piece pair of a (2,4)-replicated sharing. The four pairs are
//   P0: (r,       r - r01)
//   P1: (x - r,   x - r + r01)
//   P2: (x - r,   r - r01)
//   P3: (r,       x - r + r01)
// so any two parties reconstruct x from one exchanged element.
struct RepShare {
    u64 s = 0;   // [x]_i
    u64 sp = 0;  // [x]_i'
};

using RepShares = std::array<RepShare, kNumParties>;

// Dealer-side constructions (used by the harness/orchestrator and tests).
inline std::array<u64, 2> share_add(u64 x, u64 r) { return {r, x - r}; }

inline std::array<u64, 2> share_add(u64 x, SeededPrg& rng) { return share_add(x, rng.next()); }

inline RepShares share_rep(u64 x, u64 r, u64 r01) {
    RepShares out;
    out[0] = {r, r - r01};
    out[1] = {x - r, x - r + r01};
    out[2] = {x - r, r - r01};
    out[3] = {r, x - r + r01};
    return out;
}

inline RepShares share_rep(u64 x, SeededPrg& dealer_rng, SeededPrg& prg01) {
    return share_rep(x, dealer_rng.next(), prg01.next());
}

// Which element the members of a pair exchange to reconstruct: the plain
// piece for {0,1},{0,2},{1,3},{2,3}, the primed piece for {0,3},{1,2}.
inline bool pair_uses_prime(int a, int b) { return a + b == 3; }

inline u64 reconstruct_pair(int pa, const RepShare& a, int pb, const RepShare& b) {
    return pair_uses_prime(pa, pb) ? (a.sp + b.sp) : (a.s + b.s);
}

// Reconstructs from all four pairs' shares via P0+P1 (harness-side).
inline u64 reconstruct(const RepShares& sh) { return sh[0].s + sh[1].s; }

// Checks the full replicated structure: all six pairwise reconstructions
// agree and the replication equalities hold.
bool rep_structure_valid(const RepShares& sh);

// Sharing of a public constant (valid under every pairwise reconstruction):
// r = c, r01 = 0.
inline RepShare share_public(int party, u64 c) {
    switch (party) {
        case 0: return {c, c};
        case 1: return {0, 0};
        case 2: return {0, c};
        default: return {c, 0};
    }
}

// Local linear operations on replicated shares.
inline RepShare rep_add(const RepShare& a, const RepShare& b) { return {a.s + b.s, a.sp + b.sp}; }
inline RepShare rep_sub(const RepShare& a, const RepShare& b) { return {a.s - b.s, a.sp - b.sp}; }
inline RepShare rep_neg(const RepShare& a) { return {~a.s + 1, ~a.sp + 1}; }
inline RepShare rep_scale_int(const RepShare& a, u64 k) { return {a.s * k, a.sp * k}; }
inline RepShare rep_add_public(int party, const RepShare& a, u64 c) {
    return rep_add(a, share_public(party, c));
}

// Truncation role of each piece, by value side: the "r"-side pieces take the
// share0 role, the "x-r"-side pieces share1, so every pairwise sum mixes one
// of each and the replicated equalities survive truncation bit-for-bit.
inline TruncRole piece_role(int party) {
    return (party == 0 || party == 3) ? TruncRole::share0 : TruncRole::share1;
}
inline TruncRole prime_role(int party) {
    return (party == 0 || party == 2) ? TruncRole::share0 : TruncRole::share1;
}

inline RepShare rep_trunc(int party, const RepShare& a, int k) {
    if (k == 0) return a;
    return {trunc_prob(a.s, k, piece_role(party)), trunc_prob(a.sp, k, prime_role(party))};
}

// Multiply by a public fixed-point scalar: exact integer product on shares,
// then local truncation by frac_bits.
inline RepShare rep_scale_fp(int party, const RepShare& a, u64 c_raw, int frac_bits) {
    return rep_trunc(party, {a.s * c_raw, a.sp * c_raw}, frac_bits);
}

// (2,4)-RSS -> (2,2)-ASS, non-interactive: P0 and P1 add +/- a fresh pair
// stream element to their plain pieces. P2/P3 are inactive.
AddShare convert_rep_to_add(PartyContext& ctx, const RepShare& x);

// (2,2)-ASS -> (2,4)-RSS: one element from each of P0 and P1 to each of
// P2 and P3, laid out exactly as the replicated sharing.
RepShare convert_add_to_rep(PartyContext& ctx, u8 tag, const AddShare& x);

// Opens a replicated share to all four parties (pairwise exchange inside the
// pipeline pairs). Used by the harness and oracle-side checks.
u64 open_rep(PartyContext& ctx, u8 tag, const RepShare& x);

// Chi-square statistic over the top 8 bits of the samples, 256 bins.
// Threshold for p > 0.001 at 255 dof is ~330.5.
double chi_square_top8(std::span<const u64> samples);
constexpr double kChiSquare255Dof999 = 330.52;

}  // namespace fourpc
