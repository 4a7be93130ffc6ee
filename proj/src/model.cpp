#include "gfcad/model.hpp"

#include <cmath>

#include <json.hpp>

namespace gfcad {

using nlohmann::json;

ModelConfig paper_model_config() {
    ModelConfig cfg;
    cfg.n_blocks = 12;
    cfg.d_e = 256;
    return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
    json j;
    j["n_blocks"] = cfg.n_blocks;
    j["d_e"] = cfg.d_e;
    j["d_c"] = cfg.d_c;
    j["variant"] = cfg.variant == Variant::GMamba ? "gmamba" : "vanilla_ssd";
    j["film_enabled"] = cfg.film_enabled;
    j["K"] = cfg.conv_kernel;
    j["n_ts"] = cfg.n_ts;
    j["V"] = cfg.vocab;
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("model config parse failure: ") + e.what());
    }
    ModelConfig cfg;
    try {
        cfg.n_blocks = j.at("n_blocks").get<int>();
        cfg.d_e = j.at("d_e").get<int>();
        cfg.d_c = j.at("d_c").get<int>();
        std::string v = j.at("variant").get<std::string>();
        check(v == "gmamba" || v == "vanilla_ssd", ErrorKind::Io, "unknown variant: " + v);
        cfg.variant = v == "gmamba" ? Variant::GMamba : Variant::VanillaSSD;
        cfg.film_enabled = j.at("film_enabled").get<bool>();
        cfg.conv_kernel = j.at("K").get<int>();
        cfg.n_ts = j.at("n_ts").get<int>();
        cfg.vocab = j.at("V").get<int>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("model config schema failure: ") + e.what());
    }
    return cfg;
}

namespace {

// fan-in scaled gaussian init
Tensor init_weight(int rows, int cols, Rng& rng) {
    return Tensor::randn({rows, cols}, rng, 1.0 / std::sqrt(static_cast<double>(rows)), true);
}

std::vector<std::uint8_t> full_mask(int n) {
    return std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1);
}

std::vector<std::uint8_t> valid_mask(int n, int valid_len) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < valid_len && i < n; ++i) m[static_cast<std::size_t>(i)] = 1;
    return m;
}

}  // namespace

void GMambaModel::init_params(std::uint64_t seed) {
    check(cfg_.d_e > 0 && cfg_.n_blocks > 0 && cfg_.conv_kernel > 0 && cfg_.n_ts > 0,
          ErrorKind::Validation, "init_params: bad model config");
    params_.clear();
    Rng rng(seed);
    int d = cfg_.d_e;
    int V = cfg_.vocab;
    int kw = cfg_.kernel_width();
    auto& P = params_;

    // the embedding sets the diffusion data scale; two one-hot rows at 0.7
    // put Z_0 entries near unit variance against the N(0,1) noise
    P["emb.W"] = Tensor::randn({2 * V + 2, d}, rng, 0.7, true);
    P["emb.pos"] = Tensor::randn({cfg_.n_ts, d}, rng, 0.3, true);

    if (cfg_.variant == Variant::GMamba) {
        P["cond.g1.W"] = init_weight(3, cfg_.d_c, rng);
        P["cond.g1.b"] = Tensor::zeros({cfg_.d_c}, true);
        P["cond.g2.W"] = init_weight(cfg_.d_c, cfg_.d_c, rng);
        P["cond.g2.b"] = Tensor::zeros({cfg_.d_c}, true);
        P["cond.pe_parent"] = Tensor::randn({kParentTypeCount, d}, rng, 0.02, true);
        P["cond.pe_sibling"] = Tensor::randn({kSiblingClamp + 1, d}, rng, 0.02, true);
        P["cond.pe_role"] = Tensor::randn({kNumTokenClasses, d}, rng, 0.02, true);
        int f_in = cfg_.d_c + d;
        int f_hidden = 2 * d;
        P["cond.f1.W"] = init_weight(f_in, f_hidden, rng);
        P["cond.f1.b"] = Tensor::zeros({f_hidden}, true);
        P["cond.f2.W"] = init_weight(f_hidden, kw, rng);
        // bias the A quarter so the squashed kernel starts near 0.88
        std::vector<double> f2b(static_cast<std::size_t>(kw), 0.0);
        for (int i = 0; i < d; ++i) f2b[static_cast<std::size_t>(i)] = -2.0;
        P["cond.f2.b"] = Tensor::from_data({kw}, std::move(f2b), true);
    } else {
        P["vanilla.A"] = Tensor::full({1, d}, -2.0, true);
        P["vanilla.B"] = Tensor::randn({1, d}, rng, 0.5, true);
        P["vanilla.C"] = Tensor::randn({1, d}, rng, 0.5, true);
        P["vanilla.D"] = Tensor::randn({1, d}, rng, 0.5, true);
    }

    if (cfg_.film_enabled) {
        int h = 2 * d;
        P["film.1.W"] = init_weight(kFilmTimeFeatures, h, rng);
        P["film.1.b"] = Tensor::zeros({h}, true);
        P["film.2.W"] = Tensor::randn({h, kw}, rng, 0.01, true);
        P["film.2.b"] = Tensor::zeros({kw}, true);
    }

    for (int b = 0; b < cfg_.n_blocks; ++b) {
        std::string pre = "blk" + std::to_string(b) + ".";
        P[pre + "norm1.g"] = Tensor::full({d}, 1.0, true);
        P[pre + "conv.w"] = Tensor::randn({cfg_.conv_kernel, d}, rng,
                                          1.0 / std::sqrt(cfg_.conv_kernel), true);
        P[pre + "gsm_in.W"] = init_weight(d, 2 * d, rng);
        P[pre + "gsm_in.b"] = Tensor::zeros({2 * d}, true);
        P[pre + "gsm_out.W"] = init_weight(d, d, rng);
        P[pre + "gsm_out.b"] = Tensor::zeros({d}, true);
        P[pre + "norm2.g"] = Tensor::full({d}, 1.0, true);
        P[pre + "mlp.1.W"] = init_weight(d, 4 * d, rng);
        P[pre + "mlp.1.b"] = Tensor::zeros({4 * d}, true);
        P[pre + "mlp.2.W"] = init_weight(4 * d, d, rng);
        P[pre + "mlp.2.b"] = Tensor::zeros({d}, true);
    }

    P["out_proj.W"] = Tensor::randn({d, d}, rng, 0.01, true);
    P["out_proj.b"] = Tensor::zeros({d}, true);

    P["dec.cmd.W"] = init_weight(d, kNumTokenClasses, rng);
    P["dec.cmd.b"] = Tensor::zeros({kNumTokenClasses}, true);
    P["dec.args1.W"] = init_weight(d, 4 * d, rng);
    P["dec.args1.b"] = Tensor::zeros({4 * d}, true);
    P["dec.args2.W"] = init_weight(4 * d, 4 * d, rng);
    P["dec.args2.b"] = Tensor::zeros({4 * d}, true);
    P["dec.args3.W"] = init_weight(4 * d, 2 * V, rng);
    P["dec.args3.b"] = Tensor::zeros({2 * V}, true);
}

Tensor GMambaModel::param(const std::string& name) const {
    auto it = params_.find(name);
    check(it != params_.end(), ErrorKind::Validation, "uninitialized parameter: " + name);
    return it->second;
}

Tensor GMambaModel::embed(const CadSequence& seq) const {
    check(initialized(), ErrorKind::Validation, "embed: model parameters not initialized");
    int L = seq.size();
    check(L == cfg_.n_ts, ErrorKind::Validation,
          "embed: sequence length " + std::to_string(L) + " does not match n_ts " +
              std::to_string(cfg_.n_ts));
    int V = cfg_.vocab;

    std::vector<int> idx_a(static_cast<std::size_t>(L));
    std::vector<int> idx_b(static_cast<std::size_t>(L));
    std::vector<double> type_col(static_cast<std::size_t>(L));
    std::vector<double> step_col(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        const TokenPair& p = seq.tokens[static_cast<std::size_t>(i)];
        check(p.a < V && p.b < V, ErrorKind::Validation, "embed: token id outside vocabulary");
        idx_a[static_cast<std::size_t>(i)] = p.a;
        idx_b[static_cast<std::size_t>(i)] = V + p.b;
        // flag columns scaled to O(1); the learnable rows absorb the factor
        type_col[static_cast<std::size_t>(i)] =
            seq.type_flags[static_cast<std::size_t>(i)] / static_cast<double>(kNumTokenClasses);
        step_col[static_cast<std::size_t>(i)] =
            seq.step_flags[static_cast<std::size_t>(i)] / 8.0;
    }

    Tensor W = param("emb.W");
    Tensor z = add(embedding_rows(W, idx_a), embedding_rows(W, idx_b));
    Tensor type_t = Tensor::from_data({L, 1}, std::move(type_col));
    Tensor step_t = Tensor::from_data({L, 1}, std::move(step_col));
    z = add(z, matmul(type_t, slice_rows(W, 2 * V, 2 * V + 1)));
    z = add(z, matmul(step_t, slice_rows(W, 2 * V + 1, 2 * V + 2)));
    z = add(z, param("emb.pos"));
    return mask_rows(z, valid_mask(L, seq.valid_len));
}

Tensor GMambaModel::film_psi(int t) const {
    if (!cfg_.film_enabled) return Tensor();
    std::vector<double> feat(kFilmTimeFeatures);
    int half = kFilmTimeFeatures / 2;
    for (int i = 0; i < half; ++i) {
        double w = std::exp(-std::log(10000.0) * i / half);
        feat[static_cast<std::size_t>(2 * i)] = std::sin(t * w);
        feat[static_cast<std::size_t>(2 * i + 1)] = std::cos(t * w);
    }
    Tensor f = Tensor::from_data({1, kFilmTimeFeatures}, std::move(feat));
    Tensor h = silu(add(matmul(f, param("film.1.W")), param("film.1.b")));
    Tensor out = add(matmul(h, param("film.2.W")), param("film.2.b"));
    return add_scalar(out, 1.0);  // near-identity at init
}

KernelSet GMambaModel::make_kernels(const Conditioning& cond, int t, int L) const {
    check(initialized(), ErrorKind::Validation, "make_kernels: model not initialized");
    int d = cfg_.d_e;
    KernelSet ks;
    ks.mask = cond.seq ? valid_mask(L, cond.seq->valid_len) : full_mask(L);

    Tensor raw;  // L x 4d before squashing
    if (cfg_.variant == Variant::GMamba) {
        ks.use_gsm = true;
        // geometric conditioning vector from normalized (s, d, r)
        std::vector<double> gin(static_cast<std::size_t>(L) * 3, 0.0);
        if (cond.desc) {
            check(cond.desc->size() >= L, ErrorKind::Validation,
                  "make_kernels: descriptors shorter than sequence");
            for (int i = 0; i < L; ++i) {
                double s = cond.desc->s[static_cast<std::size_t>(i)];
                double dd = cond.desc->d[static_cast<std::size_t>(i)];
                double r = cond.desc->r[static_cast<std::size_t>(i)];
                gin[static_cast<std::size_t>(i) * 3 + 0] = s / (1.0 + s);
                gin[static_cast<std::size_t>(i) * 3 + 1] = dd / 5.0;
                gin[static_cast<std::size_t>(i) * 3 + 2] = r / (1.0 + r);
            }
        }
        Tensor g_in = Tensor::from_data({L, 3}, std::move(gin));
        Tensor delta = add(
            matmul(silu(add(matmul(g_in, param("cond.g1.W")), param("cond.g1.b"))),
                   param("cond.g2.W")),
            param("cond.g2.b"));

        HierarchyInfo hi = cond.seq ? hierarchy_info(*cond.seq) : neutral_hierarchy(L);
        Tensor pi = add(add(embedding_rows(param("cond.pe_parent"), hi.parent_type),
                            embedding_rows(param("cond.pe_sibling"), hi.sibling)),
                        embedding_rows(param("cond.pe_role"), hi.role));
        ks.pi = pi;

        Tensor f_in = concat_cols(delta, pi);
        raw = add(matmul(silu(add(matmul(f_in, param("cond.f1.W")), param("cond.f1.b"))),
                         param("cond.f2.W")),
                  param("cond.f2.b"));
    } else {
        ks.use_gsm = false;
        Tensor ones = Tensor::full({L, d}, 1.0);
        Tensor a = mul(ones, param("vanilla.A"));
        Tensor b = mul(ones, param("vanilla.B"));
        Tensor c = mul(ones, param("vanilla.C"));
        Tensor g = mul(ones, param("vanilla.D"));
        raw = concat_cols(concat_cols(a, b), concat_cols(c, g));
    }

    Tensor psi = film_psi(t);
    if (psi.defined()) raw = mul(raw, psi);

    // squash A into (0,1): exp(-softplus(x)) == sigmoid(-x)
    ks.A = sigmoid(scale(slice_cols(raw, 0, d), -1.0));
    ks.B = slice_cols(raw, d, 2 * d);
    ks.C = slice_cols(raw, 2 * d, 3 * d);
    ks.G = slice_cols(raw, 3 * d, 4 * d);
    return ks;
}

Tensor GMambaModel::gsm_ssd_scan(const Tensor& Z, const KernelSet& ks, int block) const {
    check(Z.shape().size() == 2 && Z.cols() == cfg_.d_e, ErrorKind::Numeric,
          "gsm_ssd_scan: feature width mismatch");
    check(ks.A.defined() && ks.A.rows() == Z.rows(), ErrorKind::Numeric,
          "gsm_ssd_scan: kernel/input length mismatch");
    int L = Z.rows(), d = cfg_.d_e;
    std::string pre = "blk" + std::to_string(block) + ".";

    Tensor zhat = dwconv_causal(Z, param(pre + "conv.w"));
    if (ks.pi.defined()) zhat = add(zhat, ks.pi);

    // padded positions: state passes through (A=1, B=0), output masked to zero
    bool all_valid = true;
    for (auto m : ks.mask) all_valid = all_valid && m;
    Tensor a_eff = ks.A;
    Tensor b_eff = ks.B;
    if (!all_valid) {
        std::vector<double> fill(static_cast<std::size_t>(L) * d, 0.0);
        for (int i = 0; i < L; ++i) {
            if (ks.mask[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < d; ++j) fill[static_cast<std::size_t>(i) * d + j] = 1.0;
        }
        a_eff = add(mask_rows(ks.A, ks.mask), Tensor::from_data({L, d}, std::move(fill)));
        b_eff = mask_rows(ks.B, ks.mask);
    }
    Tensor state = linear_scan(a_eff, b_eff, zhat);

    Tensor out;
    if (ks.use_gsm) {
        Tensor h_in = mul(mul(ks.A, ks.B), zhat);
        Tensor hz = add(matmul(h_in, param(pre + "gsm_in.W")), param(pre + "gsm_in.b"));
        Tensor h = slice_cols(hz, 0, d);
        Tensor z = slice_cols(hz, d, 2 * d);
        Tensor hhat = add(matmul(mul(h, sigmoid(z)), param(pre + "gsm_out.W")),
                          param(pre + "gsm_out.b"));
        out = add(mul(ks.C, state), mul(ks.G, hhat));
    } else {
        out = add(mul(ks.C, state), mul(ks.G, zhat));
    }
    return all_valid ? out : mask_rows(out, ks.mask);
}

Tensor GMambaModel::denoise(const Tensor& Zt, int t, const Conditioning& cond) const {
    check(initialized(), ErrorKind::Validation, "denoise: model parameters not initialized");
    check(Zt.shape().size() == 2 && Zt.cols() == cfg_.d_e, ErrorKind::Numeric,
          "denoise: input width does not match d_e");
    check(t >= 0, ErrorKind::Validation, "denoise: negative timestep");
    int L = Zt.rows();
    KernelSet ks = make_kernels(cond, t, L);

    bool all_valid = true;
    for (auto m : ks.mask) all_valid = all_valid && m;

    Tensor x = Zt;
    for (int b = 0; b < cfg_.n_blocks; ++b) {
        std::string pre = "blk" + std::to_string(b) + ".";
        x = add(x, gsm_ssd_scan(rms_norm(x, param(pre + "norm1.g")), ks, b));
        Tensor m = rms_norm(x, param(pre + "norm2.g"));
        m = silu(add(matmul(m, param(pre + "mlp.1.W")), param(pre + "mlp.1.b")));
        m = add(matmul(m, param(pre + "mlp.2.W")), param(pre + "mlp.2.b"));
        if (!all_valid) m = mask_rows(m, ks.mask);
        x = add(x, m);
    }
    Tensor eps = add(matmul(x, param("out_proj.W")), param("out_proj.b"));
    return all_valid ? eps : mask_rows(eps, ks.mask);
}

Checkpoint GMambaModel::to_checkpoint() const {
    Checkpoint ckpt;
    for (const auto& [name, t] : params_) {
        CheckpointEntry e;
        e.shape = t.shape();
        e.values = t.data();
        ckpt.emplace(name, std::move(e));
    }
    return ckpt;
}

void GMambaModel::load_from_checkpoint(const Checkpoint& ckpt) {
    check(initialized(), ErrorKind::Validation,
          "load_from_checkpoint: initialize parameters first");
    for (auto& [name, t] : params_) {
        auto it = ckpt.find(name);
        check(it != ckpt.end(), ErrorKind::Io, "checkpoint missing parameter: " + name);
        check(!it->second.is_raw && it->second.shape == t.shape(), ErrorKind::Io,
              "checkpoint parameter shape mismatch: " + name);
        t.update_values(it->second.values);
    }
}

}  // namespace gfcad
