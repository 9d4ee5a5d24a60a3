#pragma once

#include <array>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fourpc/prg.hpp"
#include "fourpc/ring.hpp"

namespace fourpc {

constexpr int kNumParties = 4;

// Protocol tags carried in every envelope header.
enum Tag : u8 {
    TAG_SETUP = 0,
    TAG_MULT = 1,
    TAG_HAD = 2,
    TAG_MATMULT = 3,
    TAG_DRELU = 4,
    TAG_RELU = 5,
    TAG_SOFTMAX = 6,
    TAG_POW = 7,
    TAG_DIV = 8,
    TAG_INVSQRT = 9,
    TAG_AA = 10,
    TAG_AA_SYNC = 11,
    TAG_REC = 12,
    TAG_LOG = 13,
};
constexpr int kNumTags = 16;
constexpr int kEnvelopeHeaderBytes = 9;  // 1-byte tag, 4-byte seq, 4-byte len

const char* tag_name(int tag);

struct NetProfile {
    double latency_ms = 0.0;
    double bandwidth_bps = 0.0;  // 0 = infinite
    static NetProfile lan() { return {0.3, 10e9}; }
    static NetProfile wan() { return {40.0, 400e6}; }
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Envelope {
    int from = 0;
    u8 tag = 0;
    u32 seq = 0;
    std::vector<u8> payload;
    int depth = 0;          // causal phase within the current protocol
    double arrival = 0.0;   // simulated arrival time (ms)
};

// Byte and round accounting.
//
// Two payload metrics are kept:
//  - raw payload/total bytes per (sender, tag), summing to exactly what the
//    channel layer moved;
//  - an exchange-counted payload per tag, where a symmetric pairwise exchange
//    (equal-size sends in both directions between the same two parties in the
//    same causal phase) is counted once, the way a reconstruction "exchange of
//    an element" is conventionally counted. One-directional flows count in
//    full. The per-protocol complexity assertions use this metric.
class CommStats {
public:
    void record_send(int from, int to, int tag, std::span<const u8> payload, int depth);

    u64 payload_bytes(int tag) const;          // raw, all directed sends
    u64 payload_bytes_sent_by(int party, int tag) const;
    u64 total_bytes(int tag) const;            // raw including headers
    u64 total_bytes_all() const;
    u64 message_count(int tag) const;
    u64 exchange_payload_bits(int tag) const;  // exchange-counted metric
    int phase_count(int tag) const;
    std::string transcript_digest() const;     // per-channel rolling hashes
    std::map<int, u64> payload_by_tag() const;

    void reset();

private:
    struct Bucket {
        u64 count_lo_hi = 0;  // sends low-id -> high-id party
        u64 count_hi_lo = 0;
    };
    mutable std::mutex mu_;
    u64 payload_[kNumParties][kNumTags] = {};
    u64 total_[kNumParties][kNumTags] = {};
    u64 messages_[kNumParties][kNumTags] = {};
    int max_depth_[kNumTags] = {};
    // key: tag, depth, low party, high party, payload size
    std::map<std::tuple<int, int, int, int, size_t>, Bucket> buckets_;
    // key: from, to, tag -> (fnv1a hash, byte count)
    std::map<std::tuple<int, int, int>, std::pair<u64, u64>> transcripts_;
};

// Abstract four-party message fabric. One instance is shared by the four
// party threads in local simulation; in socket mode each process owns one.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(int from, int to, Envelope env) = 0;
    virtual Envelope recv(int self, int from, u8 tag) = 0;
    CommStats stats;
    double watchdog_seconds = 30.0;
};

// In-process fabric with per-directed-channel queues and virtual time.
class LocalSimTransport : public Transport {
public:
    explicit LocalSimTransport(NetProfile profile = {}) : profile_(profile) {}
    void send(int from, int to, Envelope env) override;
    Envelope recv(int self, int from, u8 tag) override;

    NetProfile profile_;

private:
    struct Box {
        std::mutex mu;
        std::condition_variable cv;
        std::map<u8, std::deque<Envelope>> queues;
    };
    Box boxes_[kNumParties][kNumParties];  // [from][to]
};

// Per-party protocol state: identity, correlated randomness, clocks,
// sequence numbers.
struct PartyContext {
    int id = 0;
    RingParams params;
    SeededPrg pair;   // seed01 on P0/P1, seed23 on P2/P3
    SeededPrg priv;   // party-private stream
    Transport* net = nullptr;

    double vclock_ms = 0.0;
    double busy_until_ms[kNumParties] = {};
    int depth[kNumTags] = {};
    u32 send_seq[kNumParties][kNumTags] = {};
    u32 recv_seq[kNumParties][kNumTags] = {};
    u64 drelu_calls = 0;  // round-robin zero-test delegate
    int op_nesting = 0;

    bool is_low_pair() const { return id == 0 || id == 1; }
    int pair_peer() const { return id ^ 1; }

    // Marks the start of a protocol invocation for phase accounting.
    void begin(u8 tag) { depth[tag] = 0; }

    void send_bytes(int to, u8 tag, std::vector<u8> payload);
    std::vector<u8> recv_bytes(int from, u8 tag);

    void send_u64s(int to, u8 tag, std::span<const u64> words);
    std::vector<u64> recv_u64s(int from, u8 tag, size_t count);
    void send_u64(int to, u8 tag, u64 w) { send_u64s(to, tag, std::span<const u64>(&w, 1)); }
    u64 recv_u64(int from, u8 tag) { return recv_u64s(from, tag, 1)[0]; }
};

// Phase bookkeeping for one protocol invocation: the outermost scope resets
// the tag's causal depth so phase counts are per invocation; nested ops
// running under a parent's tag accumulate into the parent's count.
struct OpScope {
    PartyContext& ctx;
    OpScope(PartyContext& c, u8 tag) : ctx(c) {
        if (ctx.op_nesting++ == 0) ctx.begin(tag);
    }
    ~OpScope() { --ctx.op_nesting; }
};

// Little-endian u64 packing (wire format for shares: 64-bit LE, no padding).
void pack_u64s(std::span<const u64> words, std::vector<u8>& out);
std::vector<u64> unpack_u64s(std::span<const u8> bytes);

// Fixed-width bit packing for Z_p elements.
std::vector<u8> pack_bits(std::span<const u64> values, int bits_per_value);
std::vector<u64> unpack_bits(std::span<const u8> bytes, int bits_per_value, size_t count);

struct SessionSeeds {
    Seed seed01, seed23;
    std::array<Seed, kNumParties> private_seeds;
    static SessionSeeds derive(u64 session_seed);
};

PartyContext make_party_context(int id, const SessionSeeds& seeds, Transport* net,
                                RingParams params = {});

}  // namespace fourpc

#include <exception>
#include <thread>

namespace fourpc {

// Runs the four party programs on threads over an in-process fabric and
// returns their outputs. Any party exception is rethrown after join.
template <class T, class F>
std::array<T, kNumParties> run_session(LocalSimTransport& net, const SessionSeeds& seeds,
                                       F&& program, RingParams params = {}) {
    std::array<T, kNumParties> outputs{};
    std::array<std::exception_ptr, kNumParties> errors{};
    std::array<std::thread, kNumParties> threads;
    for (int i = 0; i < kNumParties; ++i) {
        threads[i] = std::thread([&, i] {
            try {
                PartyContext ctx = make_party_context(i, seeds, &net, params);
                outputs[i] = program(ctx);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return outputs;
}

}  // namespace fourpc
