#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fourpc/sharing.hpp"
#include "fourpc/transport.hpp"

namespace fourpc {

// Randomness consumed by one array access. Production fills this from the
// pair streams; tests may inject values (e.g. to sweep every rotation).
struct AaRandomness {
    u64 r01a = 0;               // rotation amount, reduced mod t (P0/P1)
    std::vector<u64> r01b;      // per-element masks (P0/P1)
    u64 r23a = 0, r23b = 0;     // reply masks (P2/P3)
};

// Secure array access: returns a replicated sharing of a[I] where both the
// array and the index are shared.
//
// Message schedule (two dependent phases):
//   (i)  local share conversion; P0/P1 rotate and mask their array pieces;
//   (ii) P0 -> P2 and P1 -> P3 each send t+1 ring elements (masked array plus
//        offset index) -- causally independent sends;
//   (iii) P2 -> {P0,P1} and P3 -> {P0,P1} each send one masked element;
//   (iv) local resharing into the replicated layout.
//
// A reconstructed index outside [0, t) selects an undefined element; there is
// no oblivious bounds check.
RepShare array_access(PartyContext& ctx, std::span<const RepShare> a, const RepShare& idx,
                      u8 tag = TAG_AA);

// Same result, but the P1 -> P3 transmission waits for a token from P0,
// emulating the serialized dependency chain of three-party designs.
RepShare array_access_sync_baseline(PartyContext& ctx, std::span<const RepShare> a,
                                    const RepShare& idx, u8 tag = TAG_AA_SYNC);

// Batched accesses: payloads of all k accesses are concatenated into one
// envelope per directed edge, preserving the two-phase schedule.
std::vector<RepShare> array_access_batch(PartyContext& ctx,
                                         std::span<const std::span<const RepShare>> arrays,
                                         std::span<const RepShare> idxs, u8 tag = TAG_AA);

// Test hook: run one access with explicit randomness (all parties must pass
// the same struct).
RepShare array_access_with_randomness(PartyContext& ctx, std::span<const RepShare> a,
                                      const RepShare& idx, const AaRandomness& rnd,
                                      u8 tag = TAG_AA);

}  // namespace fourpc
