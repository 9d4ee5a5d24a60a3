#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fourpc/harness.hpp"
#include "fourpc/socket_transport.hpp"

using namespace fourpc;
using nlohmann::json;

namespace {

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    cmd->add_option("--mode", cfg.mode, "local-sim | sockets");
    cmd->add_option("--party", cfg.party, "party id (sockets mode)");
    cmd->add_option("--net", cfg.net, "lan | wan | custom");
    cmd->add_option("--latency-ms", cfg.latency_ms);
    cmd->add_option("--bandwidth-bps", cfg.bandwidth_bps);
    cmd->add_option("--seed", cfg.seed);
    cmd->add_option("--dataset", cfg.dataset);
    cmd->add_option("--epochs", cfg.epochs);
    cmd->add_option("--lr", cfg.lr);
    cmd->add_option("--softmax-t", cfg.softmax_t);
    cmd->add_option("--invsqrt-r", cfg.invsqrt_r);
    cmd->add_option("--key-bits", cfg.key_bits);
    cmd->add_option("--out", cfg.out);
    cmd->add_option("--base-port", cfg.base_port);
    cmd->add_option("--host", cfg.host);
    cmd->add_option("--model", cfg.model_path);
    cmd->add_option("--reveal", cfg.reveal, "shares | probs | argmax");
    cmd->add_flag("--no-precompute", [&cfg](int64_t) { cfg.precompute = false; },
                  "disable the first-layer aggregation cache");
}

RunConfig finalize_config(CLI::App* /*cmd*/, RunConfig& flags, const std::string& config_path) {
    if (config_path.empty()) return flags;
    RunConfig cfg = load_config_file(config_path);
    // Flag values that differ from the built-in defaults override the file.
    RunConfig defaults;
    auto pick = [](auto flag, auto dflt, auto file) { return flag != dflt ? flag : file; };
    cfg.mode = pick(flags.mode, defaults.mode, cfg.mode);
    cfg.net = pick(flags.net, defaults.net, cfg.net);
    cfg.latency_ms = pick(flags.latency_ms, defaults.latency_ms, cfg.latency_ms);
    cfg.bandwidth_bps = pick(flags.bandwidth_bps, defaults.bandwidth_bps, cfg.bandwidth_bps);
    cfg.seed = pick(flags.seed, defaults.seed, cfg.seed);
    cfg.dataset = pick(flags.dataset, defaults.dataset, cfg.dataset);
    cfg.epochs = pick(flags.epochs, defaults.epochs, cfg.epochs);
    cfg.lr = pick(flags.lr, defaults.lr, cfg.lr);
    cfg.softmax_t = pick(flags.softmax_t, defaults.softmax_t, cfg.softmax_t);
    cfg.invsqrt_r = pick(flags.invsqrt_r, defaults.invsqrt_r, cfg.invsqrt_r);
    cfg.key_bits = pick(flags.key_bits, defaults.key_bits, cfg.key_bits);
    cfg.precompute = pick(flags.precompute, defaults.precompute, cfg.precompute);
    cfg.out = pick(flags.out, defaults.out, cfg.out);
    cfg.party = pick(flags.party, defaults.party, cfg.party);
    cfg.base_port = pick(flags.base_port, defaults.base_port, cfg.base_port);
    cfg.host = pick(flags.host, defaults.host, cfg.host);
    cfg.model_path = pick(flags.model_path, defaults.model_path, cfg.model_path);
    cfg.reveal = pick(flags.reveal, defaults.reveal, cfg.reveal);
    return cfg;
}

// Sockets mode: this process is one party; stats and a tiny summary go to
// per-party JSON.
int run_sockets(const RunConfig& cfg, bool train) {
    if (cfg.party < 0 || cfg.party >= kNumParties) {
        std::cerr << "sockets mode requires --party 0..3\n";
        return 2;
    }
    PlainGraph g = load_graph_dir(resolve_dataset(cfg.dataset));
    normalize_features(g);
    SeededPrg pad_rng(cfg.seed, cfg.seed ^ 0x9ad5eedULL);
    PaddedGraph padded = pad_neighbors(g, pad_rng);
    GcnDims dims{g.d_in, static_cast<size_t>(cfg.hidden), g.n_classes};
    FloatModel fm = kaiming_init(dims, cfg.seed);
    FpModel fpm = FpModel::from_float(fm, 20);

    std::array<SocketTransport::Endpoint, kNumParties> eps;
    for (int i = 0; i < kNumParties; ++i) eps[i] = {cfg.host, cfg.base_port + i};
    SocketTransport net(cfg.party, eps);
    SessionSeeds seeds = SessionSeeds::derive(cfg.seed);
    PartyContext ctx = make_party_context(cfg.party, seeds, &net);

    IterParams iter{cfg.softmax_t, cfg.invsqrt_r, -8, 8};
    SecureGraphState st = ingest(ctx, padded, cfg.seed ^ 0xd00dULL, iter, cfg.key_bits > 13);
    st.precompute = cfg.precompute;
    SeededPrg dealer(cfg.seed ^ 0x7ea1ULL, cfg.seed);
    SecureModel model = deal_model(ctx.id, fpm, 20, cfg.lr, dealer);
    if (train) {
        for (int e = 0; e < cfg.epochs; ++e) train_epoch_secure(ctx, st, model);
        if (!cfg.out.empty())
            save_model(cfg.out + ".p" + std::to_string(cfg.party) + ".model", cfg.party, model);
    } else {
        forward_secure(ctx, st, model);
    }
    json j;
    j["record"] = "party_summary";
    j["party"] = cfg.party;
    json bytes;
    for (auto& [tag, b] : net.stats.payload_by_tag()) bytes[tag_name(tag)] = b;
    j["payload_bytes_sent"] = bytes;
    std::string out = cfg.out.empty() ? "metrics" : cfg.out;
    MetricsWriter w(out + ".p" + std::to_string(cfg.party) + ".jsonl");
    w.write(j.dump());
    std::cout << j.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"four-party secret-shared GCN engine"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    auto* run = app.add_subcommand("run", "secure training run");
    add_common_flags(run, cfg, config_path);
    auto* infer = app.add_subcommand("infer", "secure inference with pretrained weights");
    add_common_flags(infer, cfg, config_path);
    int pretrain_epochs = 200;
    infer->add_option("--pretrain-epochs", pretrain_epochs);

    auto* bench = app.add_subcommand("bench", "protocol microbenchmarks (CSV)");
    std::string bench_protocol_name = "mult";
    std::vector<size_t> bench_sizes{1, 8, 64};
    add_common_flags(bench, cfg, config_path);
    bench->add_option("--protocol", bench_protocol_name,
                      "mult|hadamard|matmult|aa|aa_sync|drelu|relu|softmax|div|invsqrt");
    bench->add_option("--sizes", bench_sizes, "input sizes");

    auto* cost = app.add_subcommand("cost", "cloud cost estimate");
    std::string provider = "gcp", plan = "A";
    CostInputs ci;
    cost->add_option("--provider", provider, "gcp|azure|aws");
    cost->add_option("--plan", plan, "A (on-demand) | B (1-year commitment)");
    cost->add_option("--instances", ci.instances)->required();
    cost->add_option("--hours", ci.hours)->required();
    cost->add_option("--egress-gb", ci.egress_gb)->required();
    cost->add_option("--disk-gb", ci.disk_gb)->required();

    auto* oracle = app.add_subcommand("oracle", "plaintext reference runs");
    std::string oracle_mode = "float";
    add_common_flags(oracle, cfg, config_path);
    oracle->add_option("--arith", oracle_mode, "float | fixed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            RunConfig rc = finalize_config(run, cfg, config_path);
            if (rc.mode == "sockets") return run_sockets(rc, true);
            std::optional<MetricsWriter> w;
            if (!rc.out.empty()) w.emplace(rc.out);
            GnnRunResult r = run_secure_training(rc, w ? &*w : nullptr);
            std::cout << "epochs=" << rc.epochs << " final_loss="
                      << (r.losses.empty() ? 0.0 : r.losses.back())
                      << " accuracy=" << r.final_accuracy
                      << " oracle_accuracy=" << r.oracle_accuracy
                      << " virtual_ms=" << r.virtual_ms << "\n";
            u64 total = 0;
            for (auto& [t, b] : r.payload_by_tag) total += b;
            for (auto& [t, b] : r.payload_by_tag)
                std::cout << "  bytes[" << tag_name(t) << "]=" << b << "\n";
            std::cout << "  bytes[total]=" << total << "\n";
        } else if (infer->parsed()) {
            RunConfig rc = finalize_config(infer, cfg, config_path);
            if (rc.mode == "sockets") return run_sockets(rc, false);
            std::optional<MetricsWriter> w;
            if (!rc.out.empty()) w.emplace(rc.out);
            InferenceResult r = run_secure_inference(rc, pretrain_epochs, w ? &*w : nullptr);
            std::cout << "agreement=" << r.agreement << " accuracy=" << r.accuracy << "\n";
            if (rc.reveal == "argmax" && r.d_out > 0) {
                for (size_t v = 0; v * r.d_out < r.probs.size(); ++v) {
                    size_t best = 0;
                    for (size_t c = 1; c < r.d_out; ++c)
                        if (r.probs[v * r.d_out + c] > r.probs[v * r.d_out + best]) best = c;
                    std::cout << v << " " << best << "\n";
                }
            } else if (rc.reveal == "probs" && r.d_out > 0) {
                for (size_t v = 0; v * r.d_out < r.probs.size(); ++v) {
                    std::cout << v;
                    for (size_t c = 0; c < r.d_out; ++c)
                        std::cout << " " << r.probs[v * r.d_out + c];
                    std::cout << "\n";
                }
            }
        } else if (bench->parsed()) {
            RunConfig rc = finalize_config(bench, cfg, config_path);
            std::cout << bench_csv_header() << "\n";
            for (size_t s : bench_sizes)
                std::cout << bench_csv_row(bench_protocol(bench_protocol_name, s, rc.profile(),
                                                          rc.seed))
                          << "\n";
        } else if (cost->parsed()) {
            double dollars = estimate_cost(ci, default_pricing(), provider, plan);
            std::cout.precision(2);
            std::cout << std::fixed << "$" << dollars << "\n";
        } else if (oracle->parsed()) {
            RunConfig rc = finalize_config(oracle, cfg, config_path);
            PlainGraph g = load_graph_dir(resolve_dataset(rc.dataset));
            normalize_features(g);
            SeededPrg pad_rng(rc.seed, rc.seed ^ 0x9ad5eedULL);
            PaddedGraph padded = pad_neighbors(g, pad_rng);
            GcnDims dims{g.d_in, static_cast<size_t>(rc.hidden), g.n_classes};
            FloatModel fm = kaiming_init(dims, rc.seed);
            if (oracle_mode == "float") {
                double loss = 0;
                for (int e = 0; e < rc.epochs; ++e) loss = float_train_epoch(padded, fm, rc.lr);
                FloatForward f = float_forward(padded, fm);
                std::cout << "mode=float loss=" << loss
                          << " accuracy=" << accuracy(f.probs, padded.labels, dims.d_out) << "\n";
            } else {
                FpModel fpm = FpModel::from_float(fm, 20);
                FpParams fpp{20, rc.softmax_t, rc.invsqrt_r, -8, 8};
                double loss = 0;
                for (int e = 0; e < rc.epochs; ++e)
                    loss = fp_train_epoch(padded, fpm, fpp, rc.lr);
                FpForward f = fp_forward(padded, fpm, fpp);
                std::cout << "mode=fixed loss=" << loss
                          << " accuracy=" << fp_accuracy(f.probs, padded.labels, dims.d_out)
                          << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
