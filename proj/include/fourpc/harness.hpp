#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fourpc/gnn.hpp"
#include "fourpc/transport.hpp"

namespace fourpc {

// ---------------------------------------------------------------------------
// Cloud cost model.

struct PricingRow {
    double instance_per_hour = 0;
    double disk_per_gb_hour = 0;
    double egress_per_gb = 0;
};

// provider -> plan ("A" on-demand, "B" 1-year commitment) -> rates.
using PricingTable = std::map<std::string, std::map<std::string, PricingRow>>;

PricingTable default_pricing();

struct CostInputs {
    int instances = 0;
    double hours = 0;
    double egress_gb = 0;
    double disk_gb = 0;
};

// cost = instances * instance_rate * hours + egress * egress_rate
//        + disk_gb * disk_rate.
// The disk term enters once, not per instance-hour; that is the reading the
// published cost figures follow.
double estimate_cost(const CostInputs& in, const PricingTable& table, const std::string& provider,
                     const std::string& plan);

// ---------------------------------------------------------------------------
// Run configuration (flat key=value file, CLI flags override).

struct RunConfig {
    std::string mode = "local-sim";  // local-sim | sockets
    std::string net = "lan";         // lan | wan | custom
    double latency_ms = 0.3;
    double bandwidth_bps = 10e9;
    u64 seed = 1;
    std::string dataset;  // fixture name or directory
    int epochs = 50;
    double lr = 0.15;
    int hidden = 16;
    int softmax_t = 8;
    int invsqrt_r = 4;
    int key_bits = 31;  // relu sign width in the GNN path; 13 = narrow config
    bool precompute = true;
    std::string out;
    int party = -1;  // sockets mode
    int base_port = 19770;
    std::string host = "127.0.0.1";
    std::string model_path;
    std::string reveal = "shares";  // shares | probs | argmax

    NetProfile profile() const;
};

RunConfig load_config_file(const std::string& path);
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// ---------------------------------------------------------------------------
// Metrics (JSON lines) and their schema.

struct MetricsWriter {
    explicit MetricsWriter(const std::string& path);
    ~MetricsWriter();
    void write(const std::string& json_line);
    std::string path;
    void* handle = nullptr;
};

// Minimal schema check: required fields with expected JSON types, read from
// the shipped schema file.
bool validate_metrics_line(const std::string& json_line, const std::string& schema_path,
                           std::string* error = nullptr);

// ---------------------------------------------------------------------------
// Dataset fixtures and GNN runs.

// Resolves a dataset name ("triangle", "path4", "karate", "synth200") or a
// directory path against the data root.
std::string resolve_dataset(const std::string& name_or_path);
std::string data_root();

struct GnnRunResult {
    std::vector<double> losses;
    std::vector<double> train_accuracy;
    double final_accuracy = 0;   // over all labeled nodes
    double oracle_accuracy = 0;  // fixed-point oracle, identical seeds
    std::map<int, u64> payload_by_tag;
    double virtual_ms = 0;
    double wall_ms = 0;
    std::vector<double> final_probs;  // reconstructed
};

// Full secure training run in local simulation (the oracle runs alongside
// with identical seeds for comparison).
GnnRunResult run_secure_training(const RunConfig& cfg, MetricsWriter* metrics = nullptr);

// Secure inference with plaintext-pretrained weights; returns secure argmax
// agreement against the fixed-point oracle.
struct InferenceResult {
    double agreement = 0;
    double accuracy = 0;
    size_t d_out = 0;
    std::map<int, u64> payload_by_tag;
    std::vector<double> probs;
};
InferenceResult run_secure_inference(const RunConfig& cfg, int pretrain_epochs = 200,
                                     MetricsWriter* metrics = nullptr);

// ---------------------------------------------------------------------------
// Protocol microbenchmarks.

struct BenchRow {
    std::string protocol;
    size_t size = 0;
    double virtual_ms = 0;
    double sync_virtual_ms = 0;  // array access only
    u64 exchange_bits = 0;
    u64 payload_bytes = 0;
    int phases = 0;
};

BenchRow bench_protocol(const std::string& name, size_t size, const NetProfile& profile,
                        u64 seed);
std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

}  // namespace fourpc
