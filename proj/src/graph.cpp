#include "fourpc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fourpc {

std::vector<size_t> PlainGraph::degrees() const {
    std::vector<size_t> d(n, 0);
    for (const auto& e : edges) {
        d[e.src] += 1;
        d[e.dst] += 1;
    }
    return d;
}

size_t PlainGraph::max_degree() const {
    auto d = degrees();
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& what) {
    throw GraphParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

void validate_graph(PlainGraph& g, const std::string& origin) {
    for (const auto& e : g.edges) {
        if (e.src >= g.n || e.dst >= g.n)
            throw GraphParseError(origin + ": edge references node id >= " + std::to_string(g.n));
        if (e.src == e.dst)
            throw GraphParseError(origin + ": self-loop edges are not accepted");
    }
    int max_label = -1;
    for (int l : g.labels) max_label = std::max(max_label, l);
    g.n_classes = static_cast<size_t>(max_label + 1);
}

}  // namespace

PlainGraph load_edge_list(const std::string& edges_path, const std::string& features_path,
                          const std::string& labels_path) {
    PlainGraph g;
    {
        std::ifstream f(features_path);
        if (!f) throw GraphParseError("cannot open " + features_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto cells = split(line, ',');
            if (g.d_in == 0)
                g.d_in = cells.size();
            else if (cells.size() != g.d_in)
                parse_fail(features_path, lineno, "feature dimension mismatch");
            for (auto& c : cells) {
                try {
                    g.features.push_back(std::stod(c));
                } catch (...) {
                    parse_fail(features_path, lineno, "bad feature value '" + c + "'");
                }
            }
            g.n += 1;
        }
    }
    {
        std::ifstream f(labels_path);
        if (!f) throw GraphParseError("cannot open " + labels_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto cells = split(line, ',');
            try {
                g.labels.push_back(std::stoi(cells[0]));
            } catch (...) {
                parse_fail(labels_path, lineno, "bad label '" + cells[0] + "'");
            }
            g.train_mask.push_back(cells.size() > 1 && std::stoi(cells[1]) != 0 ? 1 : 0);
        }
        if (g.labels.size() != g.n)
            throw GraphParseError(labels_path + ": label count != node count");
    }
    {
        std::ifstream f(edges_path);
        if (!f) throw GraphParseError("cannot open " + edges_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream is(line);
            long long a = -1, b = -1;
            double w = 1.0;
            is >> a >> b;
            if (!is) parse_fail(edges_path, lineno, "expected 'src dst [weight]'");
            is >> w;  // optional
            if (a < 0 || b < 0 || static_cast<size_t>(a) >= g.n || static_cast<size_t>(b) >= g.n)
                parse_fail(edges_path, lineno, "node id out of range");
            g.edges.push_back({static_cast<u32>(a), static_cast<u32>(b), w});
        }
    }
    validate_graph(g, edges_path);
    return g;
}

PlainGraph load_json_bundle(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw GraphParseError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw GraphParseError(path + ": " + e.what());
    }
    PlainGraph g;
    g.n = j.at("num_nodes").get<size_t>();
    for (const auto& row : j.at("features")) {
        if (g.d_in == 0) g.d_in = row.size();
        if (row.size() != g.d_in) throw GraphParseError(path + ": feature dimension mismatch");
        for (const auto& v : row) g.features.push_back(v.get<double>());
    }
    if (g.features.size() != g.n * g.d_in)
        throw GraphParseError(path + ": feature row count != num_nodes");
    for (const auto& e : j.at("edges")) {
        Edge ed;
        ed.src = e.at(0).get<u32>();
        ed.dst = e.at(1).get<u32>();
        ed.w = e.size() > 2 ? e.at(2).get<double>() : 1.0;
        g.edges.push_back(ed);
    }
    for (const auto& l : j.at("labels")) g.labels.push_back(l.get<int>());
    if (j.contains("train_mask"))
        for (const auto& m : j.at("train_mask")) g.train_mask.push_back(m.get<int>() ? 1 : 0);
    else
        g.train_mask.assign(g.n, 0);
    if (g.labels.size() != g.n) throw GraphParseError(path + ": label count != num_nodes");
    validate_graph(g, path);
    return g;
}

PlainGraph load_graph_dir(const std::string& dir) {
    std::ifstream bundle(dir + "/bundle.json");
    if (bundle.good()) return load_json_bundle(dir + "/bundle.json");
    return load_edge_list(dir + "/edges.txt", dir + "/features.csv", dir + "/labels.csv");
}

NormalizeReport normalize_features(PlainGraph& g) {
    NormalizeReport rep;
    for (size_t v = 0; v < g.n; ++v) {
        double sum = 0;
        for (size_t j = 0; j < g.d_in; ++j) sum += g.feat(v, j);
        if (sum == 0.0) {
            rep.zero_rows += 1;
            rep.zero_row_ids.push_back(v);
            continue;
        }
        for (size_t j = 0; j < g.d_in; ++j) g.feat(v, j) /= sum;
    }
    return rep;
}

namespace {

PaddedGraph pad_impl(const PlainGraph& g, SeededPrg& rng, bool to_max) {
    PaddedGraph p;
    p.n = g.n;
    p.d_in = g.d_in;
    p.n_classes = g.n_classes;
    p.features = g.features;
    p.labels = g.labels;
    p.train_mask = g.train_mask;
    p.nodes.resize(g.n);
    for (const auto& e : g.edges) {
        p.nodes[e.src].nbr.push_back(e.dst);
        p.nodes[e.src].ew.push_back(e.w);
        p.nodes[e.dst].nbr.push_back(e.src);
        p.nodes[e.dst].ew.push_back(e.w);
    }
    size_t dmax = 0;
    for (auto& node : p.nodes) dmax = std::max(dmax, node.nbr.size());
    p.max_degree = dmax;
    for (auto& node : p.nodes) {
        node.true_degree = node.nbr.size();
        node.sw = 1.0;
        for (double w : node.ew) node.sw += w;
        size_t room = dmax - node.true_degree;
        size_t k = to_max ? room : rng.next_below(room + 1);
        for (size_t i = 0; i < k; ++i) {
            node.nbr.push_back(static_cast<u32>(rng.next_below(g.n)));
            node.ew.push_back(0.0);
        }
    }
    return p;
}

}  // namespace

PaddedGraph pad_neighbors(const PlainGraph& g, SeededPrg& rng) { return pad_impl(g, rng, false); }
PaddedGraph pad_to_max(const PlainGraph& g, SeededPrg& rng) { return pad_impl(g, rng, true); }

// ---------------------------------------------------------------------------
// Float reference.

FloatModel kaiming_init(GcnDims dims, u64 seed) {
    FloatModel m;
    m.dims = dims;
    SeededPrg rng(seed, 0x4a11u ^ seed);
    m.w0.resize(dims.d_in * dims.hidden);
    m.w1.resize(dims.hidden * dims.d_out);
    double s0 = std::sqrt(2.0 / static_cast<double>(dims.d_in));
    double s1 = std::sqrt(2.0 / static_cast<double>(dims.hidden));
    for (auto& w : m.w0) w = rng.next_gaussian() * s0;
    for (auto& w : m.w1) w = rng.next_gaussian() * s1;
    return m;
}

std::vector<double> float_aggregate(const PaddedGraph& g, const std::vector<double>& x,
                                    size_t width) {
    std::vector<double> out(g.n * width, 0.0);
    for (size_t v = 0; v < g.n; ++v) {
        const auto& node = g.nodes[v];
        double inv_v = 1.0 / std::sqrt(node.sw);
        double self_coef = inv_v * inv_v;
        for (size_t j = 0; j < width; ++j) out[v * width + j] = self_coef * x[v * width + j];
        for (size_t i = 0; i < node.nbr.size(); ++i) {
            size_t u = node.nbr[i];
            double coef = node.ew[i] * inv_v / std::sqrt(g.nodes[u].sw);
            for (size_t j = 0; j < width; ++j) out[v * width + j] += coef * x[u * width + j];
        }
    }
    return out;
}

namespace {

std::vector<double> matmul_f(const std::vector<double>& a, size_t n, size_t k,
                             const std::vector<double>& b, size_t m) {
    std::vector<double> out(n * m, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t kk = 0; kk < k; ++kk) {
            double av = a[i * k + kk];
            for (size_t j = 0; j < m; ++j) out[i * m + j] += av * b[kk * m + j];
        }
    return out;
}

}  // namespace

FloatForward float_forward(const PaddedGraph& g, const FloatModel& m) {
    FloatForward f;
    f.h0 = float_aggregate(g, g.features, g.d_in);
    f.z1 = matmul_f(f.h0, g.n, m.dims.d_in, m.w0, m.dims.hidden);
    f.a1 = f.z1;
    for (auto& v : f.a1) v = std::max(0.0, v);
    f.h1 = float_aggregate(g, f.a1, m.dims.hidden);
    f.z2 = matmul_f(f.h1, g.n, m.dims.hidden, m.w1, m.dims.d_out);
    f.probs.assign(f.z2.size(), 0.0);
    for (size_t v = 0; v < g.n; ++v) {
        double mx = -1e300, sum = 0;
        for (size_t c = 0; c < m.dims.d_out; ++c) mx = std::max(mx, f.z2[v * m.dims.d_out + c]);
        for (size_t c = 0; c < m.dims.d_out; ++c) {
            double e = std::exp(f.z2[v * m.dims.d_out + c] - mx);
            f.probs[v * m.dims.d_out + c] = e;
            sum += e;
        }
        for (size_t c = 0; c < m.dims.d_out; ++c) f.probs[v * m.dims.d_out + c] /= sum;
    }
    return f;
}

double float_train_epoch(const PaddedGraph& g, FloatModel& m, double lr) {
    const size_t h = m.dims.hidden, dout = m.dims.d_out, din = m.dims.d_in;
    FloatForward f = float_forward(g, m);
    size_t nm = 0;
    for (u8 b : g.train_mask) nm += b;
    if (nm == 0) throw std::invalid_argument("train: empty mask");
    double loss = 0;
    std::vector<double> g2(g.n * dout, 0.0);
    for (size_t v = 0; v < g.n; ++v) {
        if (!g.train_mask[v]) continue;
        int y = g.labels[v];
        loss -= std::log(std::max(f.probs[v * dout + y], 1e-12));
        for (size_t c = 0; c < dout; ++c)
            g2[v * dout + c] = (f.probs[v * dout + c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) /
                               static_cast<double>(nm);
    }
    // dW1 = H1^T G2
    std::vector<double> gw1(h * dout, 0.0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < h; ++i)
            for (size_t c = 0; c < dout; ++c)
                gw1[i * dout + c] += f.h1[v * h + i] * g2[v * dout + c];
    // dH1 = G2 W1^T, back through aggregation (symmetric), ReLU, W0.
    std::vector<double> gh1(g.n * h, 0.0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < h; ++i)
            for (size_t c = 0; c < dout; ++c)
                gh1[v * h + i] += g2[v * dout + c] * m.w1[i * dout + c];
    std::vector<double> ga1 = float_aggregate(g, gh1, h);
    for (size_t i = 0; i < ga1.size(); ++i)
        if (f.z1[i] <= 0.0) ga1[i] = 0.0;
    std::vector<double> gw0(din * h, 0.0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < din; ++i)
            for (size_t j = 0; j < h; ++j) gw0[i * h + j] += f.h0[v * din + i] * ga1[v * h + j];
    for (size_t i = 0; i < m.w0.size(); ++i) m.w0[i] -= lr * gw0[i];
    for (size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * gw1[i];
    return loss / static_cast<double>(nm);
}

double accuracy(const std::vector<double>& probs, const std::vector<int>& labels, size_t d_out) {
    size_t hit = 0, total = 0;
    for (size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] < 0) continue;
        size_t best = 0;
        for (size_t c = 1; c < d_out; ++c)
            if (probs[v * d_out + c] > probs[v * d_out + best]) best = c;
        hit += (static_cast<int>(best) == labels[v]);
        total += 1;
    }
    return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Fixed-point emulated oracle.

int fp_pow_bound(u64 x_raw, const FpParams& p) {
    int a = p.pow_cmin - 1;
    for (int c = p.pow_cmin; c <= p.pow_cmax; ++c) {
        u64 thresh = fp_encode_coeff(std::ldexp(1.0, c), p.frac_bits);
        if (to_signed(x_raw) >= to_signed(thresh)) a = c;
    }
    return a;
}

u64 fp_invsqrt(u64 x_raw, const FpParams& p) {
    int alpha = fp_pow_bound(x_raw, p);
    int half_up = (alpha >= 0) ? (alpha + 1) / 2 : -((-alpha) / 2);
    u64 y = fp_encode_coeff(std::ldexp(1.0, -half_up), p.frac_bits);
    const u64 enc3 = fp_encode(3.0, p.frac_bits);
    for (int it = 0; it < p.invsqrt_r; ++it) {
        u64 t1 = fp_mul(y, y, p.frac_bits);
        u64 t2 = fp_mul(x_raw, t1, p.frac_bits);
        y = fp_trunc(y * (enc3 - t2), p.frac_bits + 1);
    }
    return y;
}

u64 fp_divide(u64 a_raw, u64 b_raw, const FpParams& p) {
    int alpha = fp_pow_bound(b_raw, p);
    u64 m = fp_encode_coeff(std::ldexp(1.0, -alpha - 1), p.frac_bits);
    u64 bh = fp_mul(b_raw, m, p.frac_bits);
    u64 ah = fp_mul(a_raw, m, p.frac_bits);
    const u64 one = fp_encode(1.0, p.frac_bits);
    u64 y0 = fp_encode(2.9142, p.frac_bits) - 2 * bh;
    u64 e0 = one - fp_mul(bh, y0, p.frac_bits);
    u64 e1 = fp_mul(e0, e0, p.frac_bits);
    u64 t = fp_mul(ah, y0, p.frac_bits);
    t = fp_mul(t, one + e0, p.frac_bits);
    t = fp_mul(t, one + e1, p.frac_bits);
    return t;
}

std::vector<u64> fp_softmax(const std::vector<u64>& x_raw, const FpParams& p) {
    const size_t d = x_raw.size();
    const u64 inv_t = fp_encode(1.0 / p.softmax_t, p.frac_bits);
    std::vector<u64> xs(d);
    for (size_t i = 0; i < d; ++i) xs[i] = fp_mul(x_raw[i], inv_t, p.frac_bits);
    std::vector<u64> f(d, fp_encode(1.0 / static_cast<double>(d), p.frac_bits));
    for (int step = 0; step < p.softmax_t; ++step) {
        u64 a = 0;
        std::vector<u64> ip(d), b(d), c(d);
        for (size_t i = 0; i < d; ++i) {
            ip[i] = fp_mul(xs[i], f[i], p.frac_bits);
            a += ip[i];
        }
        for (size_t i = 0; i < d; ++i) {
            b[i] = fp_mul(a, f[i], p.frac_bits);
            c[i] = fp_mul(xs[i], f[i], p.frac_bits);
            f[i] += c[i] - b[i];
        }
    }
    return f;
}

FpModel FpModel::from_float(const FloatModel& m, int frac_bits) {
    FpModel fm;
    fm.dims = m.dims;
    fm.w0.resize(m.w0.size());
    fm.w1.resize(m.w1.size());
    for (size_t i = 0; i < m.w0.size(); ++i) fm.w0[i] = fp_encode(m.w0[i], frac_bits);
    for (size_t i = 0; i < m.w1.size(); ++i) fm.w1[i] = fp_encode(m.w1[i], frac_bits);
    return fm;
}

std::vector<u64> fp_aggregate(const PaddedGraph& g, const std::vector<u64>& x, size_t width,
                              const FpParams& p) {
    // Mirrors the secure schedule: cached inv-sqrt of sw, self term through
    // is*is, neighbor coefficient (ew * is_v) * is_u, then the state scale.
    std::vector<u64> is(g.n);
    for (size_t v = 0; v < g.n; ++v)
        is[v] = fp_invsqrt(fp_encode(g.nodes[v].sw, p.frac_bits), p);
    std::vector<u64> out(g.n * width, 0);
    for (size_t v = 0; v < g.n; ++v) {
        const auto& node = g.nodes[v];
        u64 self_coef = fp_mul(is[v], is[v], p.frac_bits);
        for (size_t j = 0; j < width; ++j)
            out[v * width + j] = fp_mul(x[v * width + j], self_coef, p.frac_bits);
        for (size_t i = 0; i < node.nbr.size(); ++i) {
            size_t u = node.nbr[i];
            u64 c1 = fp_mul(fp_encode(node.ew[i], p.frac_bits), is[v], p.frac_bits);
            u64 c2 = fp_mul(c1, is[u], p.frac_bits);
            for (size_t j = 0; j < width; ++j)
                out[v * width + j] += fp_mul(x[u * width + j], c2, p.frac_bits);
        }
    }
    return out;
}

namespace {

std::vector<u64> fp_matmul(const std::vector<u64>& a, size_t n, size_t k,
                           const std::vector<u64>& b, size_t m, int frac) {
    std::vector<u64> out(n * m, 0);
    for (size_t i = 0; i < n; ++i)
        for (size_t kk = 0; kk < k; ++kk) {
            u64 av = a[i * k + kk];
            for (size_t j = 0; j < m; ++j) out[i * m + j] += av * b[kk * m + j];
        }
    for (auto& v : out) v = fp_trunc(v, frac);
    return out;
}

}  // namespace

FpForward fp_forward(const PaddedGraph& g, const FpModel& m, const FpParams& p) {
    FpForward f;
    std::vector<u64> xenc(g.features.size());
    for (size_t i = 0; i < g.features.size(); ++i) xenc[i] = fp_encode(g.features[i], p.frac_bits);
    f.h0 = fp_aggregate(g, xenc, g.d_in, p);
    f.z1 = fp_matmul(f.h0, g.n, m.dims.d_in, m.w0, m.dims.hidden, p.frac_bits);
    f.mask.resize(f.z1.size());
    f.a1.resize(f.z1.size());
    for (size_t i = 0; i < f.z1.size(); ++i) {
        f.mask[i] = to_signed(f.z1[i]) > 0 ? 1 : 0;
        f.a1[i] = f.z1[i] * f.mask[i];
    }
    f.h1 = fp_aggregate(g, f.a1, m.dims.hidden, p);
    f.z2 = fp_matmul(f.h1, g.n, m.dims.hidden, m.w1, m.dims.d_out, p.frac_bits);
    f.probs.resize(f.z2.size());
    for (size_t v = 0; v < g.n; ++v) {
        std::vector<u64> row(f.z2.begin() + v * m.dims.d_out,
                             f.z2.begin() + (v + 1) * m.dims.d_out);
        std::vector<u64> sm = fp_softmax(row, p);
        for (size_t c = 0; c < m.dims.d_out; ++c) f.probs[v * m.dims.d_out + c] = sm[c];
    }
    return f;
}

double fp_train_epoch(const PaddedGraph& g, FpModel& m, const FpParams& p, double lr) {
    const size_t h = m.dims.hidden, dout = m.dims.d_out, din = m.dims.d_in;
    FpForward f = fp_forward(g, m, p);
    size_t nm = 0;
    for (u8 b : g.train_mask) nm += b;
    if (nm == 0) throw std::invalid_argument("train: empty mask");
    const u64 inv_m = fp_encode(1.0 / static_cast<double>(nm), p.frac_bits);
    double loss = 0;
    std::vector<u64> g2(g.n * dout, 0);
    for (size_t v = 0; v < g.n; ++v) {
        if (!g.train_mask[v]) continue;
        int y = g.labels[v];
        loss -= std::log(std::max(fp_decode(f.probs[v * dout + y], p.frac_bits), 1e-12));
        for (size_t c = 0; c < dout; ++c) {
            u64 diff = f.probs[v * dout + c] -
                       (static_cast<int>(c) == y ? fp_encode(1.0, p.frac_bits) : 0);
            g2[v * dout + c] = fp_mul(diff, inv_m, p.frac_bits);
        }
    }
    // dW1 = H1^T G2 ; dH1 = G2 W1^T ; adjoint aggregation ; ReLU mask ; dW0.
    std::vector<u64> gw1(h * dout, 0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < h; ++i)
            for (size_t c = 0; c < dout; ++c) gw1[i * dout + c] += f.h1[v * h + i] * g2[v * dout + c];
    for (auto& v : gw1) v = fp_trunc(v, p.frac_bits);
    std::vector<u64> gh1(g.n * h, 0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < h; ++i)
            for (size_t c = 0; c < dout; ++c) gh1[v * h + i] += g2[v * dout + c] * m.w1[i * dout + c];
    for (auto& v : gh1) v = fp_trunc(v, p.frac_bits);
    std::vector<u64> ga1 = fp_aggregate(g, gh1, h, p);
    for (size_t i = 0; i < ga1.size(); ++i) ga1[i] *= f.mask[i];
    std::vector<u64> gw0(din * h, 0);
    for (size_t v = 0; v < g.n; ++v)
        for (size_t i = 0; i < din; ++i)
            for (size_t j = 0; j < h; ++j) gw0[i * h + j] += f.h0[v * din + i] * ga1[v * h + j];
    for (auto& v : gw0) v = fp_trunc(v, p.frac_bits);
    const u64 enc_lr = fp_encode(lr, p.frac_bits);
    for (size_t i = 0; i < m.w0.size(); ++i) m.w0[i] -= fp_mul(gw0[i], enc_lr, p.frac_bits);
    for (size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= fp_mul(gw1[i], enc_lr, p.frac_bits);
    return loss / static_cast<double>(nm);
}

double fp_accuracy(const std::vector<u64>& probs, const std::vector<int>& labels, size_t d_out) {
    size_t hit = 0, total = 0;
    for (size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] < 0) continue;
        size_t best = 0;
        for (size_t c = 1; c < d_out; ++c)
            if (to_signed(probs[v * d_out + c]) > to_signed(probs[v * d_out + best])) best = c;
        hit += (static_cast<int>(best) == labels[v]);
        total += 1;
    }
    return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace fourpc
