#include "fourpc/array_access.hpp"

namespace fourpc {

namespace {

struct AccessPlan {
    std::span<const RepShare> a;
    const RepShare* idx;
    AaRandomness rnd;
};

// Core of the protocol, batched. `sync` serializes P1's phase-(ii) send
// behind a token from P0.
std::vector<RepShare> run_accesses(PartyContext& ctx, std::vector<AccessPlan>& plans, u8 tag,
                                   bool sync) {
    const size_t k = plans.size();
    std::vector<RepShare> out(k);

    if (ctx.is_low_pair()) {
        // Phase (i)+(ii): re-randomized additive array pieces, rotate, mask.
        // The index keeps its raw plain piece: P2 and P3 cancel it against
        // their own local pieces, so it must not be re-randomized.
        std::vector<u64> payload;
        for (auto& p : plans) {
            const size_t t = p.a.size();
            size_t base = payload.size();
            payload.resize(base + t + 1);
            std::vector<u64> ass(t);
            for (size_t i = 0; i < t; ++i) {
                u64 r = ctx.pair.next();
                ass[i] = ctx.id == 0 ? p.a[i].s + r : p.a[i].s - r;
            }
            if (p.rnd.r01b.empty()) {
                p.rnd.r01a = ctx.pair.next_below(t);
                p.rnd.r01b.resize(t);
                for (auto& m : p.rnd.r01b) m = ctx.pair.next();
            }
            // Element m moves to position (m + r01a) mod t, carrying its mask.
            for (size_t m = 0; m < t; ++m) {
                size_t pos = (m + p.rnd.r01a) % t;
                payload[base + pos] = ctx.id == 0 ? ass[m] + p.rnd.r01b[m] : ass[m] - p.rnd.r01b[m];
            }
            payload[base + t] = p.idx->s + p.rnd.r01a;
        }
        if (sync && ctx.id == 1) (void)ctx.recv_u64(0, tag);  // wait for P0's go-ahead
        ctx.send_u64s(ctx.id == 0 ? 2 : 3, tag, payload);
        if (sync && ctx.id == 0) ctx.send_u64(1, tag, 1);

        // Phase (iii) replies.
        std::vector<u64> own = ctx.recv_u64s(ctx.id == 0 ? 3 : 2, tag, k);
        std::vector<u64> prime = ctx.recv_u64s(ctx.id == 0 ? 2 : 3, tag, k);
        for (size_t i = 0; i < k; ++i) out[i] = {own[i], prime[i]};
        return out;
    }

    // P2 / P3: select at the offset index, mask, reply.
    const int src = ctx.id == 2 ? 0 : 1;
    size_t total = 0;
    for (auto& p : plans) total += p.a.size() + 1;
    std::vector<u64> payload = ctx.recv_u64s(src, tag, total);
    std::vector<u64> to_p0(k), to_p1(k);
    size_t base = 0;
    for (size_t i = 0; i < k; ++i) {
        auto& p = plans[i];
        const size_t t = p.a.size();
        if (p.rnd.r01b.empty()) {  // marker: draw pair randomness in order
            p.rnd.r23a = ctx.pair.next();
            p.rnd.r23b = ctx.pair.next();
            p.rnd.r01b.resize(1);
        }
        u64 j = payload[base + t];
        size_t h = static_cast<size_t>((j + p.idx->s) % t);
        u64 sel = payload[base + h];
        if (ctx.id == 2) {
            u64 s2 = sel + p.rnd.r23a;
            to_p1[i] = s2;
            to_p0[i] = s2 - p.rnd.r23b;
            out[i] = {s2, s2 - p.rnd.r23b};
        } else {
            u64 s3 = sel - p.rnd.r23a;
            to_p0[i] = s3;
            to_p1[i] = s3 + p.rnd.r23b;
            out[i] = {s3, s3 + p.rnd.r23b};
        }
        base += t + 1;
    }
    ctx.send_u64s(0, tag, to_p0);
    ctx.send_u64s(1, tag, to_p1);
    return out;
}

}  // namespace

RepShare array_access(PartyContext& ctx, std::span<const RepShare> a, const RepShare& idx,
                      u8 tag) {
    OpScope scope(ctx, tag);
    std::vector<AccessPlan> plans(1);
    plans[0].a = a;
    plans[0].idx = &idx;
    return run_accesses(ctx, plans, tag, false)[0];
}

RepShare array_access_sync_baseline(PartyContext& ctx, std::span<const RepShare> a,
                                    const RepShare& idx, u8 tag) {
    OpScope scope(ctx, tag);
    std::vector<AccessPlan> plans(1);
    plans[0].a = a;
    plans[0].idx = &idx;
    return run_accesses(ctx, plans, tag, true)[0];
}

std::vector<RepShare> array_access_batch(PartyContext& ctx,
                                         std::span<const std::span<const RepShare>> arrays,
                                         std::span<const RepShare> idxs, u8 tag) {
    OpScope scope(ctx, tag);
    std::vector<AccessPlan> plans(arrays.size());
    for (size_t i = 0; i < arrays.size(); ++i) {
        plans[i].a = arrays[i];
        plans[i].idx = &idxs[i];
    }
    return run_accesses(ctx, plans, tag, false);
}

RepShare array_access_with_randomness(PartyContext& ctx, std::span<const RepShare> a,
                                      const RepShare& idx, const AaRandomness& rnd, u8 tag) {
    OpScope scope(ctx, tag);
    std::vector<AccessPlan> plans(1);
    plans[0].a = a;
    plans[0].idx = &idx;
    plans[0].rnd = rnd;
    if (plans[0].rnd.r01b.empty()) plans[0].rnd.r01b.resize(1);  // suppress drawing
    return run_accesses(ctx, plans, tag, false)[0];
}

}  // namespace fourpc
