#include "fourpc/gnn.hpp"

#include <fstream>

#include "json.hpp"

namespace fourpc {

SecureTensor deal_tensor(int party, std::span<const u64> raw, size_t rows, size_t cols,
                         int frac_bits, SeededPrg& dealer) {
    SecureTensor t(rows, cols, frac_bits);
    for (size_t i = 0; i < raw.size(); ++i) {
        u64 r = dealer.next(), r01 = dealer.next();
        t.v[i] = share_rep(raw[i], r, r01)[party];
    }
    return t;
}

static std::vector<RepShare> deal_vec(int party, std::span<const u64> raw, SeededPrg& dealer) {
    std::vector<RepShare> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        u64 r = dealer.next(), r01 = dealer.next();
        out[i] = share_rep(raw[i], r, r01)[party];
    }
    return out;
}

SecureModel deal_model(int party, const FpModel& m, int frac_bits, double lr, SeededPrg& dealer) {
    SecureModel sm;
    sm.w0 = deal_tensor(party, m.w0, m.dims.d_in, m.dims.hidden, frac_bits, dealer);
    sm.w1 = deal_tensor(party, m.w1, m.dims.hidden, m.dims.d_out, frac_bits, dealer);
    sm.lr = lr;
    return sm;
}

u64 padded_graph_hash(const PaddedGraph& g) {
    u64 h = 1469598103934665603ULL;
    auto mix = [&h](u64 v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    mix(g.n);
    mix(g.d_in);
    for (const auto& node : g.nodes) {
        for (u32 id : node.nbr) mix(id);
        for (double w : node.ew) mix(from_signed(static_cast<i64>(w * 1e6)));
    }
    for (double f : g.features) mix(from_signed(static_cast<i64>(f * 1e9)));
    return h;
}

SecureGraphState ingest(PartyContext& ctx, const PaddedGraph& g, u64 dealer_seed,
                        const IterParams& iter, bool wide_relu) {
    SeededPrg dealer(dealer_seed, dealer_seed ^ 0xdea1e5ULL);
    SecureGraphState st;
    st.n = g.n;
    st.d_in = g.d_in;
    st.d_out = g.n_classes;
    st.train_mask = g.train_mask;
    st.iter = iter;
    st.relu_params = wide_relu ? DreluParams::wide(ctx.params) : DreluParams::paper();
    const int frac = ctx.params.frac_bits;

    std::vector<u64> xenc(g.features.size());
    for (size_t i = 0; i < xenc.size(); ++i) xenc[i] = fp_encode(g.features[i], frac);
    st.features = deal_tensor(ctx.id, xenc, g.n, g.d_in, frac, dealer);

    st.nbr.resize(g.n);
    st.ew.resize(g.n);
    std::vector<u64> sw_raw(g.n);
    for (size_t v = 0; v < g.n; ++v) {
        std::vector<u64> ids(g.nodes[v].nbr.size()), ws(g.nodes[v].ew.size());
        for (size_t i = 0; i < ids.size(); ++i) ids[i] = g.nodes[v].nbr[i];  // integer ids
        for (size_t i = 0; i < ws.size(); ++i) ws[i] = fp_encode(g.nodes[v].ew[i], frac);
        st.nbr[v] = deal_vec(ctx.id, ids, dealer);
        st.ew[v] = deal_vec(ctx.id, ws, dealer);
        sw_raw[v] = fp_encode(g.nodes[v].sw, frac);
    }
    st.sw = deal_vec(ctx.id, sw_raw, dealer);

    std::vector<u64> yenc(g.n * st.d_out, 0);
    for (size_t v = 0; v < g.n; ++v)
        if (g.labels[v] >= 0) yenc[v * st.d_out + g.labels[v]] = fp_encode(1.0, frac);
    st.labels_onehot = deal_tensor(ctx.id, yenc, g.n, st.d_out, frac, dealer);

    st.inv_sqrt_sw = inv_sqrt_vec(ctx, st.sw, st.iter);
    return st;
}

SecureTensor aggregate_secure(PartyContext& ctx, SecureGraphState& st, const SecureTensor& x) {
    const int frac = x.frac_bits;
    const size_t n = st.n, width = x.cols;
    const size_t edges = [&] {
        size_t e = 0;
        for (auto& nb : st.nbr) e += nb.size();
        return e;
    }();

    // Self term: (is_v)^2 x_v.
    std::vector<RepShare> self_coef(n);
    mult_vec(ctx, TAG_MULT, st.inv_sqrt_sw, st.inv_sqrt_sw, self_coef, frac);
    SecureTensor out(n, width, frac);
    {
        std::vector<RepShare> xs(n * width), cs(n * width);
        for (size_t v = 0; v < n; ++v)
            for (size_t j = 0; j < width; ++j) {
                xs[v * width + j] = x.at(v, j);
                cs[v * width + j] = self_coef[v];
            }
        mult_vec(ctx, TAG_MULT, xs, cs, out.v, frac);
    }
    if (edges == 0) return out;

    // Neighbor inverse roots via one batched access per edge.
    std::vector<std::span<const RepShare>> arrays(edges);
    std::vector<RepShare> idxs(edges);
    size_t e = 0;
    for (size_t v = 0; v < n; ++v)
        for (size_t i = 0; i < st.nbr[v].size(); ++i, ++e) {
            arrays[e] = st.inv_sqrt_sw;
            idxs[e] = st.nbr[v][i];
        }
    std::vector<RepShare> is_nbr = array_access_batch(ctx, arrays, idxs);

    // Edge coefficient (ew * is_v) * is_nbr.
    std::vector<RepShare> c1(edges), is_v_edge(edges), ew_edge(edges);
    e = 0;
    for (size_t v = 0; v < n; ++v)
        for (size_t i = 0; i < st.nbr[v].size(); ++i, ++e) {
            is_v_edge[e] = st.inv_sqrt_sw[v];
            ew_edge[e] = st.ew[v][i];
        }
    mult_vec(ctx, TAG_MULT, ew_edge, is_v_edge, c1, frac);
    std::vector<RepShare> coef(edges);
    mult_vec(ctx, TAG_MULT, c1, is_nbr, coef, frac);

    // Neighbor states: one access per edge per feature column.
    std::vector<std::vector<RepShare>> columns(width, std::vector<RepShare>(n));
    for (size_t v = 0; v < n; ++v)
        for (size_t j = 0; j < width; ++j) columns[j][v] = x.at(v, j);
    std::vector<std::span<const RepShare>> sarrays(edges * width);
    std::vector<RepShare> sidxs(edges * width);
    e = 0;
    for (size_t v = 0; v < n; ++v)
        for (size_t i = 0; i < st.nbr[v].size(); ++i, ++e)
            for (size_t j = 0; j < width; ++j) {
                sarrays[e * width + j] = columns[j];
                sidxs[e * width + j] = st.nbr[v][i];
            }
    std::vector<RepShare> states = array_access_batch(ctx, sarrays, sidxs);

    // Contribution = coeff * state, accumulated locally per node.
    std::vector<RepShare> coef_wide(edges * width);
    for (size_t k = 0; k < edges; ++k)
        for (size_t j = 0; j < width; ++j) coef_wide[k * width + j] = coef[k];
    std::vector<RepShare> contrib(edges * width);
    mult_vec(ctx, TAG_MULT, states, coef_wide, contrib, frac);
    e = 0;
    for (size_t v = 0; v < n; ++v)
        for (size_t i = 0; i < st.nbr[v].size(); ++i, ++e)
            for (size_t j = 0; j < width; ++j)
                out.at(v, j) = rep_add(out.at(v, j), contrib[e * width + j]);
    return out;
}

SecureForward forward_secure(PartyContext& ctx, SecureGraphState& st, const SecureModel& m) {
    SecureForward f;
    if (st.precompute) {
        if (!st.h0_cache) st.h0_cache = aggregate_secure(ctx, st, st.features);
        f.h0 = *st.h0_cache;
    } else {
        f.h0 = aggregate_secure(ctx, st, st.features);
    }
    f.z1 = matmult(ctx, f.h0, m.w0);
    ReluResult r = relu_vec(ctx, f.z1.v, st.relu_params);
    f.a1 = SecureTensor(f.z1.rows, f.z1.cols, f.z1.frac_bits);
    f.a1.v = std::move(r.value);
    f.relu_mask = std::move(r.mask);
    f.h1 = aggregate_secure(ctx, st, f.a1);
    f.z2 = matmult(ctx, f.h1, m.w1);
    f.probs = softmax_rows(ctx, f.z2, st.iter.softmax_t);
    return f;
}

EpochResult train_epoch_secure(PartyContext& ctx, SecureGraphState& st, SecureModel& m) {
    const int frac = ctx.params.frac_bits;
    const size_t dout = st.d_out, h = m.w0.cols, n = st.n;
    SecureForward f = forward_secure(ctx, st, m);

    size_t nm = 0;
    for (u8 b : st.train_mask) nm += b;
    if (nm == 0) throw std::invalid_argument("train_epoch: empty mask");
    const u64 inv_m = fp_encode(1.0 / static_cast<double>(nm), frac);

    // Softmax + cross-entropy composite gradient (P - Y)/m on masked rows.
    SecureTensor g2(n, dout, frac);
    for (size_t v = 0; v < n; ++v)
        for (size_t c = 0; c < dout; ++c)
            g2.at(v, c) =
                st.train_mask[v]
                    ? rep_scale_fp(ctx.id, rep_sub(f.probs.at(v, c), st.labels_onehot.at(v, c)),
                                   inv_m, frac)
                    : RepShare{0, 0};

    SecureTensor gw1 = matmult_at_b(ctx, f.h1, g2);
    SecureTensor gh1 = matmult_a_bt(ctx, g2, m.w1);
    SecureTensor ga1 = aggregate_secure(ctx, st, gh1);
    SecureTensor gz1(n, h, frac);
    mult_vec(ctx, TAG_MULT, ga1.v, f.relu_mask, gz1.v, 0);
    SecureTensor gw0 = matmult_at_b(ctx, f.h0, gz1);

    const u64 enc_lr = fp_encode(m.lr, frac);
    for (size_t i = 0; i < m.w0.v.size(); ++i)
        m.w0.v[i] = rep_sub(m.w0.v[i], rep_scale_fp(ctx.id, gw0.v[i], enc_lr, frac));
    for (size_t i = 0; i < m.w1.v.size(); ++i)
        m.w1.v[i] = rep_sub(m.w1.v[i], rep_scale_fp(ctx.id, gw1.v[i], enc_lr, frac));
    m.epoch += 1;

    // Shared loss: -1/m sum log p_true over masked rows. A small public
    // epsilon keeps the log argument positive against ODE/truncation noise.
    std::vector<RepShare> ptrue;
    for (size_t v = 0; v < n; ++v) {
        if (!st.train_mask[v]) continue;
        std::vector<RepShare> pr(dout), yr(dout), prod(dout);
        for (size_t c = 0; c < dout; ++c) {
            pr[c] = f.probs.at(v, c);
            yr[c] = st.labels_onehot.at(v, c);
        }
        mult_vec(ctx, TAG_LOG, pr, yr, prod, frac);
        RepShare acc{0, 0};
        for (size_t c = 0; c < dout; ++c) acc = rep_add(acc, prod[c]);
        ptrue.push_back(rep_add_public(ctx.id, acc, fp_encode(1.0 / 16384.0, frac)));
    }
    std::vector<RepShare> logs = log2_vec(ctx, ptrue, st.iter);
    RepShare loss{0, 0};
    for (const auto& l : logs) loss = rep_add(loss, l);
    const u64 scale = fp_encode(-std::log(2.0) / static_cast<double>(nm), frac);
    EpochResult res;
    res.loss = rep_scale_fp(ctx.id, loss, scale, frac);
    res.probs = std::move(f.probs);
    return res;
}

void save_model(const std::string& path, int party, const SecureModel& m) {
    nlohmann::json hdr;
    hdr["party"] = party;
    hdr["epoch"] = m.epoch;
    hdr["lr"] = m.lr;
    hdr["frac_bits"] = m.w0.frac_bits;
    hdr["w0_shape"] = {m.w0.rows, m.w0.cols};
    hdr["w1_shape"] = {m.w1.rows, m.w1.cols};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << hdr.dump() << "\n";
    auto dump_tensor = [&](const SecureTensor& t) {
        std::vector<u64> words;
        words.reserve(t.v.size() * 2);
        for (const auto& sh : t.v) {
            words.push_back(sh.s);
            words.push_back(sh.sp);
        }
        std::vector<u8> bytes;
        pack_u64s(words, bytes);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    };
    dump_tensor(m.w0);
    dump_tensor(m.w1);
}

SecureModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string hdr_line;
    std::getline(f, hdr_line);
    nlohmann::json hdr = nlohmann::json::parse(hdr_line);
    SecureModel m;
    m.epoch = hdr["epoch"].get<int>();
    m.lr = hdr["lr"].get<double>();
    int frac = hdr["frac_bits"].get<int>();
    auto read_tensor = [&](size_t rows, size_t cols) {
        SecureTensor t(rows, cols, frac);
        std::vector<u8> bytes(rows * cols * 16);
        f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        std::vector<u64> words = unpack_u64s(bytes);
        for (size_t i = 0; i < t.v.size(); ++i) t.v[i] = {words[2 * i], words[2 * i + 1]};
        return t;
    };
    m.w0 = read_tensor(hdr["w0_shape"][0].get<size_t>(), hdr["w0_shape"][1].get<size_t>());
    m.w1 = read_tensor(hdr["w1_shape"][0].get<size_t>(), hdr["w1_shape"][1].get<size_t>());
    return m;
}

}  // namespace fourpc
