#include "gfcad/trainer.hpp"

#include <cmath>
#include <thread>

#include <json.hpp>

namespace gfcad {

using nlohmann::json;

TrainConfig paper_train_config() {
    TrainConfig cfg;
    cfg.T = 1000;
    cfg.beta_max = 0.02;
    cfg.lr = 1e-4;
    cfg.batch = 512;
    cfg.epochs = 1000;
    return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["T"] = cfg.T;
    j["beta_min"] = cfg.beta_min;
    j["beta_max"] = cfg.beta_max;
    j["eta"] = cfg.eta;
    j["lr"] = cfg.lr;
    j["betas"] = {cfg.beta1, cfg.beta2};
    j["batch"] = cfg.batch;
    j["epochs"] = cfg.epochs;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("train config parse failure: ") + e.what());
    }
    TrainConfig cfg;
    try {
        cfg.T = j.at("T").get<int>();
        cfg.beta_min = j.at("beta_min").get<double>();
        cfg.beta_max = j.at("beta_max").get<double>();
        cfg.eta = j.at("eta").get<double>();
        cfg.lr = j.at("lr").get<double>();
        cfg.beta1 = j.at("betas")[0].get<double>();
        cfg.beta2 = j.at("betas")[1].get<double>();
        cfg.batch = j.at("batch").get<int>();
        cfg.epochs = j.at("epochs").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("train config schema failure: ") + e.what());
    }
    return cfg;
}

Trainer::Trainer(GMambaModel& model, TrainConfig cfg)
    : model_(model),
      cfg_(cfg),
      sched_(DiffusionSchedule::linear(cfg.T, cfg.beta_min, cfg.beta_max)),
      rng_(cfg.seed ^ 0xa5a5a5a5deadbeefULL) {
    check(model_.initialized(), ErrorKind::Validation, "Trainer: model not initialized");
    weights_.eta = cfg.eta;
    for (const auto& [name, t] : model_.params()) {
        m_[name] = std::vector<double>(t.numel(), 0.0);
        v_[name] = std::vector<double>(t.numel(), 0.0);
    }
}

std::vector<TrainExample> Trainer::next_batch(const std::vector<TrainExample>& pool) {
    check(!pool.empty(), ErrorKind::Validation, "next_batch: empty pool");
    std::vector<TrainExample> batch;
    int n = std::min<int>(cfg_.batch, static_cast<int>(pool.size()));
    if (static_cast<int>(pool.size()) == n) {
        batch = pool;  // full-batch regime
    } else {
        for (int i = 0; i < n; ++i) batch.push_back(pool[rng_.below(pool.size())]);
    }
    return batch;
}

StepMetrics Trainer::step(const std::vector<TrainExample>& batch) {
    check(!batch.empty(), ErrorKind::Validation, "train step: empty batch");
    std::size_t n = batch.size();
    std::uint64_t step_seed = rng_.next_u64();

    // timesteps drawn on the control thread for determinism
    Rng trng(step_seed);
    std::vector<int> ts(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = 1 + static_cast<int>(trng.below(static_cast<std::uint64_t>(sched_.T)));
    }

    std::vector<GradMap> sinks(n);
    std::vector<LossBreakdown> bds(n);
    std::vector<std::string> errors(n);

    int hw = cfg_.threads > 0 ? cfg_.threads
                              : static_cast<int>(std::thread::hardware_concurrency());
    int n_threads = std::max(1, std::min<int>(hw, static_cast<int>(n)));
    auto work = [&](int w) {
        for (std::size_t i = static_cast<std::size_t>(w); i < n;
             i += static_cast<std::size_t>(n_threads)) {
            try {
                Tensor loss = example_loss(model_, batch[i], ts[i], sched_, weights_,
                                           Rng::derive(step_seed, i), &bds[i]);
                backward_collect(loss, sinks[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (n_threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < n_threads; ++w) threads.emplace_back(work, w);
        for (auto& th : threads) th.join();
    }
    for (const auto& err : errors) {
        check(err.empty(), ErrorKind::Numeric, "train step failed: " + err);
    }

    // fixed-order reduction, then Adam
    ++step_;
    double inv_n = 1.0 / static_cast<double>(n);
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (const auto& [name, t] : model_.params()) {
        const TensorNode* node = t.node();
        std::vector<double> grad(t.numel(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = sinks[i].find(node);
            if (it == sinks[i].end()) continue;
            const auto& gi = it->second;
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += gi[k] * inv_n;
        }
        auto& m = m_[name];
        auto& v = v_[name];
        std::vector<double> upd = t.data();
        for (std::size_t k = 0; k < grad.size(); ++k) {
            double g = grad[k];
            check(std::isfinite(g), ErrorKind::Numeric, "non-finite gradient in " + name);
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m[k] / bc1;
            double vhat = v[k] / bc2;
            upd[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + 1e-8);
        }
        const_cast<Tensor&>(t).update_values(upd);
    }

    StepMetrics sm;
    sm.step = step_;
    for (const auto& bd : bds) {
        sm.loss.total += bd.total * inv_n;
        sm.loss.diffusion += bd.diffusion * inv_n;
        sm.loss.command += bd.command * inv_n;
        sm.loss.args += bd.args * inv_n;
    }
    check(std::isfinite(sm.loss.total), ErrorKind::Numeric, "train step: non-finite loss");
    return sm;
}

Checkpoint Trainer::to_checkpoint() const {
    Checkpoint ckpt = model_.to_checkpoint();
    for (const auto& [name, m] : m_) {
        CheckpointEntry em;
        em.shape = {static_cast<int>(m.size())};
        em.values = m;
        ckpt.emplace("opt.m." + name, std::move(em));
        CheckpointEntry ev;
        ev.shape = {static_cast<int>(v_.at(name).size())};
        ev.values = v_.at(name);
        ckpt.emplace("opt.v." + name, std::move(ev));
    }
    CheckpointEntry meta;
    meta.is_raw = true;
    meta.shape = {2};
    meta.raw = {static_cast<std::uint64_t>(step_), rng_.state()};
    ckpt.emplace("opt.state", std::move(meta));
    return ckpt;
}

void Trainer::load_from_checkpoint(const Checkpoint& ckpt) {
    model_.load_from_checkpoint(ckpt);
    for (auto& [name, m] : m_) {
        auto im = ckpt.find("opt.m." + name);
        auto iv = ckpt.find("opt.v." + name);
        check(im != ckpt.end() && iv != ckpt.end(), ErrorKind::Io,
              "checkpoint missing optimizer state for " + name);
        check(im->second.values.size() == m.size(), ErrorKind::Io,
              "optimizer state size mismatch for " + name);
        m = im->second.values;
        v_[name] = iv->second.values;
    }
    auto is = ckpt.find("opt.state");
    check(is != ckpt.end() && is->second.is_raw && is->second.raw.size() == 2, ErrorKind::Io,
          "checkpoint missing opt.state");
    step_ = static_cast<std::int64_t>(is->second.raw[0]);
    rng_.set_state(is->second.raw[1]);
}

std::vector<PrimOwner> token_primitives(const CadSequence& seq) {
    int n = seq.size();
    std::vector<PrimOwner> out(static_cast<std::size_t>(n), PrimOwner::None);
    int limit = std::min(seq.valid_len, n);
    // loop buffering mirrors the parser: curve kind is resolved at e_l
    std::vector<std::pair<int, int>> curves;  // (first token idx, n_coords) incl e_c
    int cur_start = -1, cur_coords = 0;
    bool in_extrusion = false;
    for (int i = 0; i < limit; ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        if (!is_reserved(p.a) && is_value(p.b)) {
            if (cur_start < 0) cur_start = i;
            ++cur_coords;
            continue;
        }
        if (!is_reserved(p.a)) {  // scalar
            if (in_extrusion) out[static_cast<std::size_t>(i)] = PrimOwner::Extrusion;
            continue;
        }
        switch (p.a) {
            case tok::kEndCurve:
                if (cur_start >= 0) curves.push_back({cur_start, cur_coords});
                cur_start = -1;
                cur_coords = 0;
                break;
            case tok::kEndLoop: {
                bool single = curves.size() == 1;
                for (auto [start, coords] : curves) {
                    PrimOwner owner = coords == 3 ? PrimOwner::Arc
                                      : single    ? PrimOwner::Circle
                                                  : PrimOwner::Line;
                    for (int k = start; k <= start + coords && k < limit; ++k) {
                        out[static_cast<std::size_t>(k)] = owner;  // coords + e_c
                    }
                }
                curves.clear();
                break;
            }
            case tok::kEndSketch:
                in_extrusion = true;
                break;
            case tok::kEndExtrusion:
                out[static_cast<std::size_t>(i)] = PrimOwner::Extrusion;
                in_extrusion = false;
                break;
            default: break;
        }
    }
    return out;
}

void AccuracyCounters::add(const CadSequence& gt, const std::vector<int>& pred_classes,
                           const CadSequence& pred) {
    std::vector<PrimOwner> owners = token_primitives(gt);
    for (int i = 0; i < gt.valid_len && i < gt.size(); ++i) {
        std::size_t idx = static_cast<std::size_t>(i);
        ++cmd_n;
        if (pred_classes[idx] == gt.type_flags[idx]) ++cmd_ok;

        TokenClass cls = static_cast<TokenClass>(gt.type_flags[idx]);
        bool is_value_token = cls == TokenClass::Coord || cls == TokenClass::ExtScalar ||
                              cls == TokenClass::Beta;
        bool match = pred.tokens[idx] == gt.tokens[idx];
        if (is_value_token) {
            ++par_n;
            if (match) ++par_ok;
        }
        PrimOwner o = owners[idx];
        bool owner_counts =
            (o == PrimOwner::Extrusion && is_value_token) ||
            ((o == PrimOwner::Line || o == PrimOwner::Arc || o == PrimOwner::Circle) &&
             cls == TokenClass::Coord);
        if (owner_counts) {
            ++prim_n[static_cast<int>(o)];
            if (match) ++prim_ok[static_cast<int>(o)];
        }
    }
}

AccuracyReport AccuracyCounters::report() const {
    auto pct = [](std::int64_t ok, std::int64_t n) {
        return n == 0 ? 0.0 : 100.0 * static_cast<double>(ok) / static_cast<double>(n);
    };
    AccuracyReport rep;
    rep.acc_cmd = pct(cmd_ok, cmd_n);
    rep.acc_param = pct(par_ok, par_n);
    rep.acc_line = pct(prim_ok[1], prim_n[1]);
    rep.acc_arc = pct(prim_ok[2], prim_n[2]);
    rep.acc_circle = pct(prim_ok[3], prim_n[3]);
    rep.acc_ext = pct(prim_ok[4], prim_n[4]);
    return rep;
}

AccuracyReport paired_accuracy(const GMambaModel& model, const DiffusionSchedule& sched,
                               const std::vector<TrainExample>& examples, std::uint64_t seed) {
    check(!examples.empty(), ErrorKind::Validation, "paired_accuracy: no examples");
    NoGradGuard ng;
    int t_eval = std::max(1, static_cast<int>(std::lround(sched.T / 10.0)));

    AccuracyCounters counters;
    for (std::size_t e = 0; e < examples.size(); ++e) {
        const CadSequence& seq = *examples[e].seq;
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(seq.size()), 0);
        for (int i = 0; i < seq.valid_len; ++i) mask[static_cast<std::size_t>(i)] = 1;

        Tensor z0 = model.embed(seq);
        auto [zt, eps] = forward_sample(z0, t_eval, sched, Rng::derive(seed, e), &mask);
        Conditioning cond{&seq, examples[e].desc};
        Tensor eps_hat = model.denoise(zt, t_eval, cond);
        Tensor z0_hat = estimate_z0(zt, t_eval, eps_hat, sched);
        DecodeOutput dec = decode_distributions(model, z0_hat, seq.valid_len);
        CadSequence pred = assemble(dec);

        const auto& cmd = dec.cmd_probs.data();
        int n_cmd = dec.cmd_probs.cols();
        std::vector<int> pred_classes(static_cast<std::size_t>(seq.size()), 0);
        for (int i = 0; i < seq.size(); ++i) {
            const double* crow = cmd.data() + static_cast<std::size_t>(i) * n_cmd;
            int best = 0;
            for (int c = 1; c < n_cmd; ++c) {
                if (crow[c] > crow[best]) best = c;
            }
            if (i == 0) best = static_cast<int>(TokenClass::Cls);  // assembly prior
            pred_classes[static_cast<std::size_t>(i)] = best;
        }
        counters.add(seq, pred_classes, pred);
    }
    return counters.report();
}

}  // namespace gfcad
