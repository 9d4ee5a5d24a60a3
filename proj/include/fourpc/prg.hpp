#pragma once

#include "fourpc/ring.hpp"

namespace fourpc {

// Counter-mode keyed generator. The same (key, counter) pair yields the same
// output on every host, which is what lets two parties holding a common seed
// derive identical randomness without talking.
//
// Output word i is splitmix-style finalized from the 128-bit key and the
// counter; the finalizer is a strong 64-bit mixing permutation.
struct SeededPrg {
    u64 key_lo = 0;
    u64 key_hi = 0;
    u64 counter = 0;

    SeededPrg() = default;
    SeededPrg(u64 lo, u64 hi) : key_lo(lo), key_hi(hi) {}

    static u64 mix(u64 z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    // Stateless access by counter.
    u64 at(u64 ctr) const {
        u64 a = mix(ctr * 0x9e3779b97f4a7c15ULL + key_lo);
        u64 b = mix((ctr + 0x632be59bd9b4e019ULL) * 0xd1342543de82ef95ULL + key_hi);
        return mix(a ^ (b + 0x9e3779b97f4a7c15ULL));
    }

    u64 next() { return at(counter++); }

    // Uniform in [0, n). Modulo bias is < 2^-50 for the n used here.
    u64 next_below(u64 n) { return n <= 1 ? 0 : next() % n; }

    // Uniform in the multiplicative group of Z_p.
    u64 next_unit_mod(u64 p) { return 1 + next() % (p - 1); }

    u64 next_bit() { return next() & 1ULL; }

    double next_unit_real() { return (next() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller.
    double next_gaussian() {
        double u1 = next_unit_real();
        double u2 = next_unit_real();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
    }
};

// 128-bit seed identifying a correlated randomness stream.
struct Seed {
    u64 lo = 0;
    u64 hi = 0;
};

}  // namespace fourpc
