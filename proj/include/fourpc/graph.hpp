#pragma once

#include <string>
#include <vector>

#include "fourpc/prg.hpp"
#include "fourpc/ring.hpp"

namespace fourpc {

struct GraphParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Edge {
    u32 src = 0, dst = 0;
    double w = 1.0;
};

// Undirected graph as loaded: unique edges, row-major features, optional
// labels and training mask. Self loops are rejected at load time; the
// self-connection is added analytically in the aggregation.
struct PlainGraph {
    size_t n = 0;
    size_t d_in = 0;
    size_t n_classes = 0;
    std::vector<Edge> edges;
    std::vector<double> features;  // n x d_in
    std::vector<int> labels;       // -1 when absent
    std::vector<u8> train_mask;

    double& feat(size_t v, size_t j) { return features[v * d_in + j]; }
    double feat(size_t v, size_t j) const { return features[v * d_in + j]; }
    std::vector<size_t> degrees() const;
    size_t max_degree() const;
};

// Per-node neighbor arrays after random padding. Dummy entries carry weight
// exactly zero and a uniformly random neighbor id, so aggregation over the
// padded graph equals aggregation over the plain graph.
struct PaddedNode {
    std::vector<u32> nbr;
    std::vector<double> ew;
    size_t true_degree = 0;
    double sw = 1.0;  // 1 + sum of edge weights (dummies add nothing)
};

struct PaddedGraph {
    size_t n = 0;
    size_t d_in = 0;
    size_t n_classes = 0;
    size_t max_degree = 0;
    std::vector<PaddedNode> nodes;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<u8> train_mask;

    double feat(size_t v, size_t j) const { return features[v * d_in + j]; }
};

// Loaders. Edge-list format: one "src dst [weight]" per line, '#' comments;
// features: one CSV row per node; labels: "label[,train]" per node.
PlainGraph load_edge_list(const std::string& edges_path, const std::string& features_path,
                          const std::string& labels_path);
// Single JSON bundle {num_nodes, edges, features, labels, train_mask}.
PlainGraph load_json_bundle(const std::string& path);
// Loads either layout rooted at a directory (bundle.json, or edges.txt +
// features.csv + labels.csv).
PlainGraph load_graph_dir(const std::string& dir);

struct NormalizeReport {
    size_t zero_rows = 0;
    std::vector<size_t> zero_row_ids;
};
// Row-normalizes features in place; zero-sum rows are left unchanged and
// reported.
NormalizeReport normalize_features(PlainGraph& g);

// Random neighbor padding: node v gains k ~ Uniform{0..max(0, d_max - d_v)}
// dummy entries; expectation (d_max - d_v)/2.
PaddedGraph pad_neighbors(const PlainGraph& g, SeededPrg& rng);

// Pads every node to d_max (the uniform-padding baseline, for comparisons).
PaddedGraph pad_to_max(const PlainGraph& g, SeededPrg& rng);

// ---------------------------------------------------------------------------
// Plaintext reference models.

struct GcnDims {
    size_t d_in = 0, hidden = 16, d_out = 0;
};

struct FloatModel {
    GcnDims dims;
    std::vector<double> w0, w1;
};

FloatModel kaiming_init(GcnDims dims, u64 seed);

struct FloatForward {
    std::vector<double> h0, z1, a1, h1, z2, probs;  // layer intermediates
};

// Float-mode forward pass per the aggregation rule
//   xbar_v = x_v / sw_v + sum_j ew_vj / (sqrt(sw_v) sqrt(sw_nj)) x_nj
// with exact softmax.
FloatForward float_forward(const PaddedGraph& g, const FloatModel& m);
double float_train_epoch(const PaddedGraph& g, FloatModel& m, double lr);  // returns loss
double accuracy(const std::vector<double>& probs, const std::vector<int>& labels, size_t d_out);

// Float-mode aggregation only (padding-invisibility checks).
std::vector<double> float_aggregate(const PaddedGraph& g, const std::vector<double>& x,
                                    size_t width);

// ---------------------------------------------------------------------------
// Fixed-point emulated oracle: mirrors the secure pipeline's encoding,
// truncation points and iteration counts on plaintext values.

struct FpParams {
    int frac_bits = 20;
    int softmax_t = 8;
    int invsqrt_r = 4;
    int pow_cmin = -8, pow_cmax = 8;
};

// Signed floor truncation; the secure probabilistic truncation reconstructs
// to this value or this value plus one raw unit.
inline u64 fp_trunc(u64 raw, int k) { return from_signed(to_signed(raw) >> k); }
inline u64 fp_mul(u64 a, u64 b, int k) { return fp_trunc(a * b, k); }

u64 fp_invsqrt(u64 x_raw, const FpParams& p);
u64 fp_divide(u64 a_raw, u64 b_raw, const FpParams& p);
std::vector<u64> fp_softmax(const std::vector<u64>& x_raw, const FpParams& p);
int fp_pow_bound(u64 x_raw, const FpParams& p);  // floor(log2 value)

struct FpModel {
    GcnDims dims;
    std::vector<u64> w0, w1;
    static FpModel from_float(const FloatModel& m, int frac_bits);
};

struct FpForward {
    std::vector<u64> h0, z1, a1, mask, h1, z2, probs;
};

FpForward fp_forward(const PaddedGraph& g, const FpModel& m, const FpParams& p);
// One SGD step; returns the float value of the CE loss of the epoch's
// forward pass (loss computed on reconstructed probabilities).
double fp_train_epoch(const PaddedGraph& g, FpModel& m, const FpParams& p, double lr);
std::vector<u64> fp_aggregate(const PaddedGraph& g, const std::vector<u64>& x, size_t width,
                              const FpParams& p);
double fp_accuracy(const std::vector<u64>& probs, const std::vector<int>& labels, size_t d_out);

}  // namespace fourpc
