#include "fourpc/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fourpc {

using nlohmann::json;

PricingTable default_pricing() {
    PricingTable t;
    t["gcp"]["A"] = {0.2338, 0.00012, 0.08};
    t["gcp"]["B"] = {0.1473, 0.00008, 0.08};
    t["azure"]["A"] = {0.192, 0.01315, 0.08};
    t["azure"]["B"] = {0.134, 0.01315, 0.08};
    t["aws"]["A"] = {0.25, 0.00013, 0.09};
    t["aws"]["B"] = {0.1787, 0.00013, 0.09};
    return t;
}

double estimate_cost(const CostInputs& in, const PricingTable& table, const std::string& provider,
                     const std::string& plan) {
    auto pit = table.find(provider);
    if (pit == table.end()) throw std::invalid_argument("unknown provider " + provider);
    auto rit = pit->second.find(plan);
    if (rit == pit->second.end()) throw std::invalid_argument("unknown plan " + plan);
    const PricingRow& r = rit->second;
    return in.instances * r.instance_per_hour * in.hours + in.egress_gb * r.egress_per_gb +
           in.disk_gb * r.disk_per_gb_hour;
}

NetProfile RunConfig::profile() const {
    if (net == "lan") return NetProfile::lan();
    if (net == "wan") return NetProfile::wan();
    return {latency_ms, bandwidth_bps};
}

void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") cfg.mode = value;
    else if (key == "net") cfg.net = value;
    else if (key == "latency_ms") cfg.latency_ms = std::stod(value);
    else if (key == "bandwidth_bps") cfg.bandwidth_bps = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "dataset") cfg.dataset = value;
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "lr") cfg.lr = std::stod(value);
    else if (key == "hidden") cfg.hidden = std::stoi(value);
    else if (key == "softmax_t") cfg.softmax_t = std::stoi(value);
    else if (key == "invsqrt_r") cfg.invsqrt_r = std::stoi(value);
    else if (key == "key_bits") cfg.key_bits = std::stoi(value);
    else if (key == "precompute") cfg.precompute = value == "1" || value == "true";
    else if (key == "out") cfg.out = value;
    else if (key == "party") cfg.party = std::stoi(value);
    else if (key == "base_port") cfg.base_port = std::stoi(value);
    else if (key == "host") cfg.host = value;
    else if (key == "model") cfg.model_path = value;
    else if (key == "reveal") cfg.reveal = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig load_config_file(const std::string& path) {
    RunConfig cfg;
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        apply_config_kv(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

MetricsWriter::MetricsWriter(const std::string& p) : path(p) {
    auto* f = new std::ofstream(p, std::ios::app);
    if (!*f) throw std::runtime_error("cannot open metrics file " + p);
    handle = f;
}

MetricsWriter::~MetricsWriter() { delete static_cast<std::ofstream*>(handle); }

void MetricsWriter::write(const std::string& line) {
    auto* f = static_cast<std::ofstream*>(handle);
    (*f) << line << "\n";
    f->flush();
}

bool validate_metrics_line(const std::string& json_line, const std::string& schema_path,
                           std::string* error) {
    json schema, rec;
    try {
        std::ifstream sf(schema_path);
        sf >> schema;
        rec = json::parse(json_line);
    } catch (const std::exception& e) {
        if (error) *error = e.what();
        return false;
    }
    std::string type = rec.value("record", "");
    if (!schema["records"].contains(type)) {
        if (error) *error = "unknown record type '" + type + "'";
        return false;
    }
    for (auto& [field, ftype] : schema["records"][type].items()) {
        if (!rec.contains(field)) {
            if (error) *error = "missing field '" + field + "'";
            return false;
        }
        const auto& v = rec[field];
        std::string t = ftype.get<std::string>();
        bool ok = (t == "number" && v.is_number()) || (t == "string" && v.is_string()) ||
                  (t == "integer" && v.is_number_integer()) || (t == "object" && v.is_object()) ||
                  (t == "boolean" && v.is_boolean());
        if (!ok) {
            if (error) *error = "field '" + field + "' has wrong type";
            return false;
        }
    }
    return true;
}

std::string data_root() {
    if (const char* env = std::getenv("FOURPC_DATA")) return env;
#ifdef FOURPC_DATA_DIR
    return FOURPC_DATA_DIR;
#else
    return "data";
#endif
}

std::string resolve_dataset(const std::string& name_or_path) {
    std::ifstream probe(name_or_path + "/labels.csv");
    std::ifstream probe2(name_or_path + "/bundle.json");
    if (probe.good() || probe2.good()) return name_or_path;
    return data_root() + "/" + name_or_path;
}

// ---------------------------------------------------------------------------
// GNN runs.

namespace {

struct PreparedRun {
    PaddedGraph padded;
    FpModel fp_model;
    FloatModel float_model;
    FpParams fpp;
    GcnDims dims;
};

PreparedRun prepare(const RunConfig& cfg) {
    PreparedRun pr;
    PlainGraph g = load_graph_dir(resolve_dataset(cfg.dataset));
    normalize_features(g);
    SeededPrg pad_rng(cfg.seed, cfg.seed ^ 0x9ad5eedULL);
    pr.padded = pad_neighbors(g, pad_rng);
    pr.dims = {g.d_in, static_cast<size_t>(cfg.hidden), g.n_classes};
    pr.float_model = kaiming_init(pr.dims, cfg.seed);
    pr.fp_model = FpModel::from_float(pr.float_model, 20);
    pr.fpp = FpParams{20, cfg.softmax_t, cfg.invsqrt_r, -8, 8};
    return pr;
}

struct PartyTrainOut {
    std::vector<RepShare> losses;
    SecureTensor probs;
    double vclock = 0;
};

}  // namespace

GnnRunResult run_secure_training(const RunConfig& cfg, MetricsWriter* metrics) {
    PreparedRun pr = prepare(cfg);
    auto t0 = std::chrono::steady_clock::now();

    LocalSimTransport net(cfg.profile());
    SessionSeeds seeds = SessionSeeds::derive(cfg.seed);
    IterParams iter{cfg.softmax_t, cfg.invsqrt_r, -8, 8};
    const bool wide = cfg.key_bits > 13;
    const int epochs = cfg.epochs;
    const RunConfig* cp = &cfg;
    const PreparedRun* prp = &pr;

    auto outs = run_session<PartyTrainOut>(net, seeds, [&](PartyContext& ctx) {
        SecureGraphState st = ingest(ctx, prp->padded, cp->seed ^ 0xd00dULL, iter, wide);
        st.precompute = cp->precompute;
        SeededPrg dealer(cp->seed ^ 0x7ea1ULL, cp->seed);
        SecureModel model = deal_model(ctx.id, prp->fp_model, 20, cp->lr, dealer);
        PartyTrainOut out;
        for (int e = 0; e < epochs; ++e) {
            EpochResult er = train_epoch_secure(ctx, st, model);
            out.losses.push_back(er.loss);
            if (e == epochs - 1) out.probs = std::move(er.probs);
        }
        out.vclock = ctx.vclock_ms;
        return out;
    });

    // Oracle run with identical seeds and schedule.
    FpModel oracle = pr.fp_model;
    std::vector<double> oracle_losses;
    for (int e = 0; e < epochs; ++e)
        oracle_losses.push_back(fp_train_epoch(pr.padded, oracle, pr.fpp, cfg.lr));
    FpForward of = fp_forward(pr.padded, oracle, pr.fpp);

    GnnRunResult res;
    const size_t dout = pr.dims.d_out;
    res.final_probs.resize(pr.padded.n * dout);
    for (size_t i = 0; i < res.final_probs.size(); ++i)
        res.final_probs[i] = fp_decode(outs[0].probs.v[i].s + outs[1].probs.v[i].s, 20);
    res.final_accuracy = accuracy(res.final_probs, pr.padded.labels, dout);
    res.oracle_accuracy = fp_accuracy(of.probs, pr.padded.labels, dout);
    for (int e = 0; e < epochs; ++e) {
        double loss = fp_decode(outs[0].losses[e].s + outs[1].losses[e].s, 20);
        res.losses.push_back(loss);
    }
    res.payload_by_tag = net.stats.payload_by_tag();
    res.virtual_ms = 0;
    for (auto& o : outs) res.virtual_ms = std::max(res.virtual_ms, o.vclock);
    res.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (metrics) {
        for (int e = 0; e < epochs; ++e) {
            json j;
            j["record"] = "epoch";
            j["epoch"] = e;
            j["loss"] = res.losses[e];
            j["oracle_loss"] = oracle_losses[e];
            metrics->write(j.dump());
        }
        json j;
        j["record"] = "summary";
        j["mode"] = cfg.mode;
        j["dataset"] = cfg.dataset;
        j["epochs"] = epochs;
        j["accuracy"] = res.final_accuracy;
        j["oracle_accuracy"] = res.oracle_accuracy;
        j["virtual_ms"] = res.virtual_ms;
        j["wall_ms"] = res.wall_ms;
        json bytes;
        for (auto& [tag, b] : res.payload_by_tag) bytes[tag_name(tag)] = b;
        j["payload_bytes"] = bytes;
        metrics->write(j.dump());
    }
    return res;
}

InferenceResult run_secure_inference(const RunConfig& cfg, int pretrain_epochs,
                                     MetricsWriter* metrics) {
    PreparedRun pr = prepare(cfg);
    // Plaintext pretraining, then the weights move to the ciphertext domain.
    for (int e = 0; e < pretrain_epochs; ++e) float_train_epoch(pr.padded, pr.float_model, cfg.lr);
    FpModel frozen = FpModel::from_float(pr.float_model, 20);

    LocalSimTransport net(cfg.profile());
    SessionSeeds seeds = SessionSeeds::derive(cfg.seed);
    IterParams iter{cfg.softmax_t, cfg.invsqrt_r, -8, 8};
    const bool wide = cfg.key_bits > 13;
    const PreparedRun* prp = &pr;
    const RunConfig* cp = &cfg;
    const FpModel* fz = &frozen;

    auto outs = run_session<SecureTensor>(net, seeds, [&](PartyContext& ctx) {
        SecureGraphState st = ingest(ctx, prp->padded, cp->seed ^ 0xd00dULL, iter, wide);
        st.precompute = cp->precompute;
        SeededPrg dealer(cp->seed ^ 0x7ea1ULL, cp->seed);
        SecureModel model = deal_model(ctx.id, *fz, 20, cp->lr, dealer);
        SecureForward f = forward_secure(ctx, st, model);
        return f.probs;
    });

    FpForward of = fp_forward(pr.padded, frozen, pr.fpp);
    const size_t dout = pr.dims.d_out;
    InferenceResult res;
    res.d_out = dout;
    res.probs.resize(pr.padded.n * dout);
    for (size_t i = 0; i < res.probs.size(); ++i)
        res.probs[i] = fp_decode(outs[0].v[i].s + outs[1].v[i].s, 20);
    size_t agree = 0;
    for (size_t v = 0; v < pr.padded.n; ++v) {
        size_t sa = 0, oa = 0;
        for (size_t c = 1; c < dout; ++c) {
            if (res.probs[v * dout + c] > res.probs[v * dout + sa]) sa = c;
            if (to_signed(of.probs[v * dout + c]) > to_signed(of.probs[v * dout + oa])) oa = c;
        }
        agree += (sa == oa);
    }
    res.agreement = static_cast<double>(agree) / static_cast<double>(pr.padded.n);
    res.accuracy = accuracy(res.probs, pr.padded.labels, dout);
    res.payload_by_tag = net.stats.payload_by_tag();
    if (metrics) {
        json j;
        j["record"] = "inference";
        j["dataset"] = cfg.dataset;
        j["agreement"] = res.agreement;
        j["accuracy"] = res.accuracy;
        metrics->write(j.dump());
    }
    return res;
}

// ---------------------------------------------------------------------------
// Microbenchmarks.

namespace {

struct BenchOut {
    double vclock = 0;
};

double run_bench_session(const std::string& name, size_t size, const NetProfile& profile,
                         u64 seed, LocalSimTransport& net, bool sync_variant) {
    SessionSeeds seeds = SessionSeeds::derive(seed);
    SeededPrg dealer(seed ^ 0xbe9cULL, seed);
    RingParams rp;
    const int frac = rp.frac_bits;

    // Pre-dealt inputs, identical for every party program.
    std::vector<RepShares> xs(size), ys(size);
    for (size_t i = 0; i < size; ++i) {
        xs[i] = share_rep(fp_encode(0.5 + (i % 7) * 0.25, frac), dealer.next(), dealer.next());
        ys[i] = share_rep(fp_encode(1.0 + (i % 5) * 0.125, frac), dealer.next(), dealer.next());
    }
    RepShares idx = share_rep(size / 2, dealer.next(), dealer.next());

    auto outs = run_session<BenchOut>(net, seeds, [&](PartyContext& ctx) {
        std::vector<RepShare> x(size), y(size), out(size);
        for (size_t i = 0; i < size; ++i) {
            x[i] = xs[i][ctx.id];
            y[i] = ys[i][ctx.id];
        }
        if (name == "mult") {
            mult_vec(ctx, TAG_MULT, std::span<const RepShare>(x).first(1),
                     std::span<const RepShare>(y).first(1), std::span<RepShare>(out).first(1),
                     frac);
        } else if (name == "hadamard") {
            mult_vec(ctx, TAG_HAD, x, y, out, frac);
        } else if (name == "matmult") {
            SecureTensor a(size, size, frac), b(size, size, frac);
            for (size_t i = 0; i < size * size; ++i) {
                a.v[i] = xs[i % size][ctx.id];
                b.v[i] = ys[i % size][ctx.id];
            }
            matmult(ctx, a, b);
        } else if (name == "aa" || name == "aa_sync") {
            if (sync_variant || name == "aa_sync")
                array_access_sync_baseline(ctx, x, idx[ctx.id]);
            else
                array_access(ctx, x, idx[ctx.id]);
        } else if (name == "drelu") {
            drelu_vec(ctx, TAG_DRELU, x, DreluParams::paper());
        } else if (name == "relu") {
            relu_vec(ctx, x, DreluParams::paper());
        } else if (name == "softmax") {
            SecureTensor t(1, size, frac);
            t.v = x;
            softmax_rows(ctx, t, 8);
        } else if (name == "div") {
            divide_vec(ctx, x, y, {});
        } else if (name == "invsqrt") {
            inv_sqrt_vec(ctx, y, {});
        } else {
            throw std::invalid_argument("unknown protocol '" + name + "'");
        }
        return BenchOut{ctx.vclock_ms};
    });
    double v = 0;
    for (auto& o : outs) v = std::max(v, o.vclock);
    (void)profile;
    return v;
}

}  // namespace

BenchRow bench_protocol(const std::string& name, size_t size, const NetProfile& profile,
                        u64 seed) {
    BenchRow row;
    row.protocol = name;
    row.size = size;
    LocalSimTransport net(profile);
    row.virtual_ms = run_bench_session(name, size, profile, seed, net, false);
    int tag = TAG_MULT;
    if (name == "hadamard") tag = TAG_HAD;
    else if (name == "matmult") tag = TAG_MATMULT;
    else if (name == "aa") tag = TAG_AA;
    else if (name == "aa_sync") tag = TAG_AA_SYNC;
    else if (name == "drelu") tag = TAG_DRELU;
    else if (name == "relu") tag = TAG_RELU;
    else if (name == "softmax") tag = TAG_SOFTMAX;
    else if (name == "div") tag = TAG_DIV;
    else if (name == "invsqrt") tag = TAG_INVSQRT;
    row.exchange_bits = net.stats.exchange_payload_bits(tag);
    row.payload_bytes = net.stats.payload_bytes(tag);
    row.phases = net.stats.phase_count(tag);
    if (name == "aa") {
        LocalSimTransport net2(profile);
        row.sync_virtual_ms = run_bench_session(name, size, profile, seed, net2, true);
    }
    return row;
}

std::string bench_csv_header() {
    return "protocol,size,virtual_ms,sync_virtual_ms,exchange_bits,payload_bytes,phases";
}

std::string bench_csv_row(const BenchRow& r) {
    std::ostringstream os;
    os << r.protocol << "," << r.size << "," << r.virtual_ms << "," << r.sync_virtual_ms << ","
       << r.exchange_bits << "," << r.payload_bytes << "," << r.phases;
    return os.str();
}

}  // namespace fourpc
