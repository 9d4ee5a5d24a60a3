#include "fourpc/transport.hpp"

#include <chrono>
#include <sstream>

namespace fourpc {

const char* tag_name(int tag) {
    switch (tag) {
        case TAG_SETUP: return "setup";
        case TAG_MULT: return "mult";
        case TAG_HAD: return "hadamard";
        case TAG_MATMULT: return "matmult";
        case TAG_DRELU: return "drelu";
        case TAG_RELU: return "relu";
        case TAG_SOFTMAX: return "softmax";
        case TAG_POW: return "pow";
        case TAG_DIV: return "div";
        case TAG_INVSQRT: return "invsqrt";
        case TAG_AA: return "aa";
        case TAG_AA_SYNC: return "aa_sync";
        case TAG_REC: return "rec";
        case TAG_LOG: return "log";
        default: return "unknown";
    }
}

static u64 fnv1a(u64 h, std::span<const u8> bytes) {
    for (u8 b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

void CommStats::record_send(int from, int to, int tag, std::span<const u8> payload, int depth) {
    std::lock_guard<std::mutex> lk(mu_);
    size_t payload_len = payload.size();
    payload_[from][tag] += payload_len;
    total_[from][tag] += payload_len + kEnvelopeHeaderBytes;
    messages_[from][tag] += 1;
    if (depth > max_depth_[tag]) max_depth_[tag] = depth;
    int lo = std::min(from, to), hi = std::max(from, to);
    auto& b = buckets_[{tag, depth, lo, hi, payload_len}];
    if (from == lo)
        b.count_lo_hi += 1;
    else
        b.count_hi_lo += 1;
    auto& t = transcripts_[{from, to, tag}];
    if (t.first == 0) t.first = 1469598103934665603ULL;
    t.first = fnv1a(t.first, payload);
    t.second += payload_len;
}

u64 CommStats::payload_bytes(int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (int p = 0; p < kNumParties; ++p) s += payload_[p][tag];
    return s;
}

u64 CommStats::payload_bytes_sent_by(int party, int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    return payload_[party][tag];
}

u64 CommStats::total_bytes(int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (int p = 0; p < kNumParties; ++p) s += total_[p][tag];
    return s;
}

u64 CommStats::total_bytes_all() const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (int p = 0; p < kNumParties; ++p)
        for (int t = 0; t < kNumTags; ++t) s += total_[p][t];
    return s;
}

u64 CommStats::message_count(int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 s = 0;
    for (int p = 0; p < kNumParties; ++p) s += messages_[p][tag];
    return s;
}

u64 CommStats::exchange_payload_bits(int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    u64 bits = 0;
    for (const auto& [key, b] : buckets_) {
        if (std::get<0>(key) != tag) continue;
        size_t len = std::get<4>(key);
        bits += 8ULL * len * std::max(b.count_lo_hi, b.count_hi_lo);
    }
    return bits;
}

int CommStats::phase_count(int tag) const {
    std::lock_guard<std::mutex> lk(mu_);
    return max_depth_[tag];
}

std::string CommStats::transcript_digest() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::ostringstream os;
    for (const auto& [key, val] : transcripts_)
        os << std::get<0>(key) << ">" << std::get<1>(key) << ":" << tag_name(std::get<2>(key))
           << "=" << std::hex << val.first << std::dec << "/" << val.second << ";";
    return os.str();
}

std::map<int, u64> CommStats::payload_by_tag() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::map<int, u64> out;
    for (int t = 0; t < kNumTags; ++t) {
        u64 s = 0;
        for (int p = 0; p < kNumParties; ++p) s += payload_[p][t];
        if (s) out[t] = s;
    }
    return out;
}

void CommStats::reset() {
    std::lock_guard<std::mutex> lk(mu_);
    std::memset(payload_, 0, sizeof payload_);
    std::memset(total_, 0, sizeof total_);
    std::memset(messages_, 0, sizeof messages_);
    std::memset(max_depth_, 0, sizeof max_depth_);
    buckets_.clear();
    transcripts_.clear();
}

void LocalSimTransport::send(int from, int to, Envelope env) {
    stats.record_send(from, to, env.tag, env.payload, env.depth);
    Box& box = boxes_[from][to];
    std::lock_guard<std::mutex> lk(box.mu);
    box.queues[env.tag].push_back(std::move(env));
    box.cv.notify_all();
}

Envelope LocalSimTransport::recv(int self, int from, u8 tag) {
    Box& box = boxes_[from][self];
    std::unique_lock<std::mutex> lk(box.mu);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(watchdog_seconds * 1000));
    bool ok = box.cv.wait_until(lk, deadline, [&] {
        auto it = box.queues.find(tag);
        return it != box.queues.end() && !it->second.empty();
    });
    if (!ok)
        throw TransportError("watchdog: P" + std::to_string(self) + " blocked on recv from P" +
                             std::to_string(from) + " tag " + tag_name(tag));
    Envelope env = std::move(box.queues[tag].front());
    box.queues[tag].pop_front();
    return env;
}

void PartyContext::send_bytes(int to, u8 tag, std::vector<u8> payload) {
    Envelope env;
    env.from = id;
    env.tag = tag;
    env.seq = send_seq[to][tag]++;
    env.depth = depth[tag] + 1;

    auto* sim = dynamic_cast<LocalSimTransport*>(net);
    double tx_ms = 0.0;
    double latency = 0.0;
    if (sim) {
        const NetProfile& p = sim->profile_;
        latency = p.latency_ms;
        if (p.bandwidth_bps > 0)
            tx_ms = 8.0 * static_cast<double>(payload.size() + kEnvelopeHeaderBytes) /
                    p.bandwidth_bps * 1000.0;
    }
    double start = std::max(vclock_ms, busy_until_ms[to]);
    busy_until_ms[to] = start + tx_ms;
    env.arrival = start + tx_ms + latency;
    env.payload = std::move(payload);
    net->send(id, to, std::move(env));
}

std::vector<u8> PartyContext::recv_bytes(int from, u8 tag) {
    Envelope env = net->recv(id, from, tag);
    if (env.seq != recv_seq[from][tag]++)
        throw TransportError("protocol desync: P" + std::to_string(id) + " from P" +
                             std::to_string(from) + " tag " + tag_name(tag));
    depth[tag] = std::max(depth[tag], env.depth);
    vclock_ms = std::max(vclock_ms, env.arrival);
    return std::move(env.payload);
}

void PartyContext::send_u64s(int to, u8 tag, std::span<const u64> words) {
    std::vector<u8> bytes;
    pack_u64s(words, bytes);
    send_bytes(to, tag, std::move(bytes));
}

std::vector<u64> PartyContext::recv_u64s(int from, u8 tag, size_t count) {
    std::vector<u8> bytes = recv_bytes(from, tag);
    if (bytes.size() != count * 8)
        throw TransportError("unexpected payload size on tag " + std::string(tag_name(tag)));
    return unpack_u64s(bytes);
}

void pack_u64s(std::span<const u64> words, std::vector<u8>& out) {
    out.resize(words.size() * 8);
    for (size_t i = 0; i < words.size(); ++i) {
        u64 w = words[i];
        for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<u8>(w >> (8 * b));
    }
}

std::vector<u64> unpack_u64s(std::span<const u8> bytes) {
    std::vector<u64> out(bytes.size() / 8);
    for (size_t i = 0; i < out.size(); ++i) {
        u64 w = 0;
        for (int b = 0; b < 8; ++b) w |= static_cast<u64>(bytes[i * 8 + b]) << (8 * b);
        out[i] = w;
    }
    return out;
}

std::vector<u8> pack_bits(std::span<const u64> values, int bits_per_value) {
    std::vector<u8> out((values.size() * bits_per_value + 7) / 8, 0);
    size_t bitpos = 0;
    for (u64 v : values) {
        for (int b = 0; b < bits_per_value; ++b, ++bitpos)
            if ((v >> b) & 1ULL) out[bitpos / 8] |= static_cast<u8>(1u << (bitpos % 8));
    }
    return out;
}

std::vector<u64> unpack_bits(std::span<const u8> bytes, int bits_per_value, size_t count) {
    std::vector<u64> out(count, 0);
    size_t bitpos = 0;
    for (size_t i = 0; i < count; ++i) {
        for (int b = 0; b < bits_per_value; ++b, ++bitpos)
            if (bytes[bitpos / 8] & (1u << (bitpos % 8))) out[i] |= 1ULL << b;
    }
    return out;
}

SessionSeeds SessionSeeds::derive(u64 session_seed) {
    SeededPrg root(session_seed, 0x5eedba5eu ^ session_seed);
    SessionSeeds s;
    s.seed01 = {root.next(), root.next()};
    s.seed23 = {root.next(), root.next()};
    for (int i = 0; i < kNumParties; ++i) s.private_seeds[i] = {root.next(), root.next()};
    return s;
}

PartyContext make_party_context(int id, const SessionSeeds& seeds, Transport* net,
                                RingParams params) {
    PartyContext ctx;
    ctx.id = id;
    ctx.params = params;
    Seed pair = (id < 2) ? seeds.seed01 : seeds.seed23;
    ctx.pair = SeededPrg(pair.lo, pair.hi);
    ctx.priv = SeededPrg(seeds.private_seeds[id].lo, seeds.private_seeds[id].hi);
    ctx.net = net;
    return ctx;
}

}  // namespace fourpc
