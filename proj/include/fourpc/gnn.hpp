#pragma once

#include <optional>
#include <string>

#include "fourpc/array_access.hpp"
#include "fourpc/graph.hpp"
#include "fourpc/linear.hpp"
#include "fourpc/nonlinear.hpp"

namespace fourpc {

struct SecureModel {
    SecureTensor w0, w1;
    double lr = 0.15;
    int epoch = 0;
};

// Everything the parties hold about one shared graph: feature shares,
// per-node neighbor-id and edge-weight shares, sw and its secure inverse
// square root, plus the precomputed first-layer aggregation.
struct SecureGraphState {
    size_t n = 0, d_in = 0, d_out = 0;
    SecureTensor features;
    std::vector<std::vector<RepShare>> nbr;  // integer-valued id shares
    std::vector<std::vector<RepShare>> ew;   // fixed-point weight shares
    std::vector<RepShare> sw;
    std::vector<RepShare> inv_sqrt_sw;
    SecureTensor labels_onehot;
    std::vector<u8> train_mask;  // public
    std::optional<SecureTensor> h0_cache;
    DreluParams relu_params;
    IterParams iter;
    bool precompute = true;
};

// Shares every field of the padded graph. All parties derive the dealer's
// randomness from dealer_seed, keeping only their own pieces; the secure
// inverse-sqrt cache is then built with the real protocol.
SecureGraphState ingest(PartyContext& ctx, const PaddedGraph& g, u64 dealer_seed,
                        const IterParams& iter = {}, bool wide_relu = true);

// One aggregation pass: out_v = (1/sw_v) x_v + sum_j coeff_vj x_nbr, with
// neighbor states and inverse roots fetched through batched array accesses
// on the shared neighbor ids.
SecureTensor aggregate_secure(PartyContext& ctx, SecureGraphState& st, const SecureTensor& x);

struct SecureForward {
    SecureTensor h0, z1, a1, h1, z2, probs;
    std::vector<RepShare> relu_mask;
};

SecureForward forward_secure(PartyContext& ctx, SecureGraphState& st, const SecureModel& m);

struct EpochResult {
    RepShare loss;          // shared cross-entropy estimate
    SecureTensor probs;     // training-pass probabilities
};

EpochResult train_epoch_secure(PartyContext& ctx, SecureGraphState& st, SecureModel& m);

// Checkpoints: one file per party, a JSON header line followed by the raw
// little-endian share payload.
void save_model(const std::string& path, int party, const SecureModel& m);
SecureModel load_model(const std::string& path);

// Harness-side dealers (deterministic in dealer_seed).
SecureTensor deal_tensor(int party, std::span<const u64> raw, size_t rows, size_t cols,
                         int frac_bits, SeededPrg& dealer);
SecureModel deal_model(int party, const FpModel& m, int frac_bits, double lr, SeededPrg& dealer);

u64 padded_graph_hash(const PaddedGraph& g);

}  // namespace fourpc
