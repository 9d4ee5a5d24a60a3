#pragma once

#include <functional>

#include "fourpc/gnn.hpp"
#include "fourpc/harness.hpp"
#include "fourpc/nonlinear.hpp"

namespace fourpc::testing {

// Runs the four-party program on a fresh in-process fabric; returns per-party
// outputs plus the fabric for stats inspection.
template <class T, class F>
std::array<T, kNumParties> run4(F&& fn, u64 seed = 42, NetProfile profile = {},
                                LocalSimTransport* keep = nullptr) {
    LocalSimTransport local(profile);
    LocalSimTransport& net = keep ? *keep : local;
    SessionSeeds seeds = SessionSeeds::derive(seed);
    return run_session<T>(net, seeds, std::forward<F>(fn));
}

// Dealer-side sharing of a plaintext vector; index [party][element].
inline std::array<std::vector<RepShare>, kNumParties> deal(std::span<const u64> xs, u64 seed) {
    SeededPrg rng(seed, seed ^ 0xbeefULL);
    std::array<std::vector<RepShare>, kNumParties> out;
    for (auto& v : out) v.resize(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        RepShares sh = share_rep(xs[i], rng.next(), rng.next());
        for (int p = 0; p < kNumParties; ++p) out[p][i] = sh[i == SIZE_MAX ? 0 : p];
    }
    return out;
}

inline std::array<std::vector<RepShare>, kNumParties> deal_reals(std::span<const double> vs,
                                                                 int frac, u64 seed) {
    std::vector<u64> raw(vs.size());
    for (size_t i = 0; i < vs.size(); ++i) raw[i] = fp_encode(vs[i], frac);
    return deal(raw, seed);
}

// Gathers one element's four shares from per-party output vectors.
inline RepShares gather(const std::array<std::vector<RepShare>, kNumParties>& outs, size_t i) {
    RepShares sh;
    for (int p = 0; p < kNumParties; ++p) sh[p] = outs[p][i];
    return sh;
}

inline u64 open_raw(const std::array<std::vector<RepShare>, kNumParties>& outs, size_t i) {
    return outs[0][i].s + outs[1][i].s;
}

inline double open_real(const std::array<std::vector<RepShare>, kNumParties>& outs, size_t i,
                        int frac = 20) {
    return fp_decode(open_raw(outs, i), frac);
}

// Absolute difference in raw units between a reconstructed share pair and an
// expected raw value.
inline u64 ulp_distance(u64 got, u64 expected) {
    u64 d = got - expected;
    return std::min(d, ~d + 1);
}

}  // namespace fourpc::testing
