#include "gfcad/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "gfcad/codec.hpp"

namespace gfcad {

DiffusionSchedule DiffusionSchedule::linear(int T, double beta_min, double beta_max) {
    check(T >= 1, ErrorKind::Validation, "schedule: T must be >= 1");
    check(beta_min > 0 && beta_max < 1 && beta_min <= beta_max, ErrorKind::Validation,
          "schedule: betas must satisfy 0 < beta_min <= beta_max < 1");
    DiffusionSchedule s;
    s.T = T;
    s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
    s.alpha.assign(static_cast<std::size_t>(T) + 1, 1.0);
    s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
    s.sigma.assign(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        s.beta[static_cast<std::size_t>(t)] = beta_min + (beta_max - beta_min) * frac;
        s.alpha[static_cast<std::size_t>(t)] = 1.0 - s.beta[static_cast<std::size_t>(t)];
        s.alpha_bar[static_cast<std::size_t>(t)] =
            s.alpha_bar[static_cast<std::size_t>(t - 1)] * s.alpha[static_cast<std::size_t>(t)];
        s.sigma[static_cast<std::size_t>(t)] =
            t == 1 ? 0.0 : std::sqrt(s.beta[static_cast<std::size_t>(t)]);
    }
    return s;
}

namespace {

void check_t(const DiffusionSchedule& sched, int t, bool allow_zero) {
    check(t >= (allow_zero ? 0 : 1) && t <= sched.T, ErrorKind::Validation,
          "timestep " + std::to_string(t) + " outside [" + (allow_zero ? "0" : "1") + "," +
              std::to_string(sched.T) + "]");
}

Tensor seeded_noise(int rows, int cols, std::uint64_t seed,
                    const std::vector<std::uint8_t>* row_mask) {
    Rng rng(seed);
    std::vector<double> n(static_cast<std::size_t>(rows) * cols);
    for (double& v : n) v = rng.normal();
    if (row_mask) {
        check(row_mask->size() == static_cast<std::size_t>(rows), ErrorKind::Numeric,
              "noise row mask length mismatch");
        for (int i = 0; i < rows; ++i) {
            if ((*row_mask)[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < cols; ++j) n[static_cast<std::size_t>(i) * cols + j] = 0.0;
        }
    }
    return Tensor::from_data({rows, cols}, std::move(n));
}

}  // namespace

std::pair<Tensor, Tensor> forward_sample(const Tensor& Z0, int t, const DiffusionSchedule& sched,
                                         std::uint64_t seed,
                                         const std::vector<std::uint8_t>* row_mask) {
    check_t(sched, t, /*allow_zero=*/true);
    double abar = sched.alpha_bar[static_cast<std::size_t>(t)];
    Tensor eps = seeded_noise(Z0.rows(), Z0.cols(), seed, row_mask);
    Tensor zt = add(scale(Z0, std::sqrt(abar)), scale(eps, std::sqrt(1.0 - abar)));
    return {zt, eps};
}

Tensor reverse_step(const Tensor& Zt, int t, const Tensor& eps_hat,
                    const DiffusionSchedule& sched, std::uint64_t seed, bool deterministic,
                    const std::vector<std::uint8_t>* row_mask) {
    check_t(sched, t, /*allow_zero=*/false);
    double alpha = sched.alpha[static_cast<std::size_t>(t)];
    double abar = sched.alpha_bar[static_cast<std::size_t>(t)];
    double coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
    Tensor mu = scale(add(Zt, scale(eps_hat, -coef)), 1.0 / std::sqrt(alpha));
    double sigma = sched.sigma[static_cast<std::size_t>(t)];
    if (deterministic || sigma == 0.0) return mu;
    Tensor xi = seeded_noise(Zt.rows(), Zt.cols(), seed, row_mask);
    return add(mu, scale(xi, sigma));
}

Tensor estimate_z0(const Tensor& Zt, int t, const Tensor& eps_hat,
                   const DiffusionSchedule& sched) {
    check_t(sched, t, /*allow_zero=*/true);
    double abar = sched.alpha_bar[static_cast<std::size_t>(t)];
    return scale(add(Zt, scale(eps_hat, -std::sqrt(1.0 - abar))), 1.0 / std::sqrt(abar));
}

Tensor example_loss(const GMambaModel& model, const TrainExample& ex, int t,
                    const DiffusionSchedule& sched, const LossWeights& weights,
                    std::uint64_t noise_seed, LossBreakdown* breakdown) {
    check(ex.seq != nullptr, ErrorKind::Validation, "example_loss: missing sequence");
    check(weights.eta >= 0, ErrorKind::Validation, "example_loss: eta must be >= 0");
    const CadSequence& seq = *ex.seq;
    int L = seq.size();
    int V = model.config().vocab;

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(L), 0);
    for (int i = 0; i < seq.valid_len; ++i) mask[static_cast<std::size_t>(i)] = 1;

    Tensor z0 = model.embed(seq);
    auto [zt, eps] = forward_sample(z0, t, sched, noise_seed, &mask);
    Conditioning cond{&seq, ex.desc};
    Tensor eps_hat = model.denoise(zt, t, cond);
    Tensor diff = mse_masked(eps_hat, eps, mask);

    Tensor z0_hat = estimate_z0(zt, t, eps_hat, sched);
    DecodeOutput dec = decode_distributions(model, z0_hat, seq.valid_len);

    std::vector<int> cmd_targets(static_cast<std::size_t>(L));
    std::vector<int> a_targets(static_cast<std::size_t>(L));
    std::vector<int> b_targets(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        cmd_targets[static_cast<std::size_t>(i)] = seq.type_flags[static_cast<std::size_t>(i)];
        a_targets[static_cast<std::size_t>(i)] = seq.tokens[static_cast<std::size_t>(i)].a;
        b_targets[static_cast<std::size_t>(i)] = seq.tokens[static_cast<std::size_t>(i)].b;
    }
    Tensor cmd_ce = cross_entropy_rows(dec.cmd_logits, cmd_targets, mask);
    Tensor args_ce = add(cross_entropy_rows(slice_cols(dec.arg_logits, 0, V), a_targets, mask),
                         cross_entropy_rows(slice_cols(dec.arg_logits, V, 2 * V), b_targets, mask));

    Tensor total = add(add(diff, cmd_ce), scale(args_ce, weights.eta));
    if (breakdown) {
        breakdown->diffusion = diff.item();
        breakdown->command = cmd_ce.item();
        breakdown->args = args_ce.item();
        breakdown->total = total.item();
    }
    return total;
}

Tensor total_loss(const GMambaModel& model, const std::vector<TrainExample>& batch,
                  const DiffusionSchedule& sched, const LossWeights& weights, std::uint64_t seed,
                  LossBreakdown* breakdown) {
    check(!batch.empty(), ErrorKind::Validation, "total_loss: empty batch");
    Rng rng(seed);
    Tensor acc;
    LossBreakdown sum;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
        std::uint64_t noise_seed = Rng::derive(seed, i);
        LossBreakdown bd;
        Tensor li = example_loss(model, batch[i], t, sched, weights, noise_seed, &bd);
        sum.total += bd.total;
        sum.diffusion += bd.diffusion;
        sum.command += bd.command;
        sum.args += bd.args;
        acc = acc.defined() ? add(acc, li) : li;
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    if (breakdown) {
        breakdown->total = sum.total * inv;
        breakdown->diffusion = sum.diffusion * inv;
        breakdown->command = sum.command * inv;
        breakdown->args = sum.args * inv;
    }
    Tensor out = scale(acc, inv);
    check(std::isfinite(out.item()), ErrorKind::Numeric, "total_loss: non-finite loss");
    return out;
}

std::vector<SampleResult> sample(const GMambaModel& model, const DiffusionSchedule& sched, int n,
                                 std::uint64_t seed, const std::vector<Conditioning>* teacher) {
    check(model.initialized(), ErrorKind::Validation, "sample: model not initialized");
    check(n >= 1, ErrorKind::Validation, "sample: n must be >= 1");
    NoGradGuard ng;

    std::vector<SampleResult> results;
    results.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Conditioning cond;
        if (teacher && !teacher->empty()) {
            cond = (*teacher)[static_cast<std::size_t>(i) % teacher->size()];
        }
        int L = cond.seq ? cond.seq->size() : model.config().n_ts;
        std::vector<std::uint8_t> mask;
        const std::vector<std::uint8_t>* mask_ptr = nullptr;
        if (cond.seq) {
            mask.assign(static_cast<std::size_t>(L), 0);
            for (int k = 0; k < cond.seq->valid_len; ++k) mask[static_cast<std::size_t>(k)] = 1;
            mask_ptr = &mask;
        }

        std::uint64_t chain_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
        Tensor z = seeded_noise(L, model.config().d_e, chain_seed, mask_ptr);
        for (int t = sched.T; t >= 1; --t) {
            Tensor eps_hat = model.denoise(z, t, cond);
            // clamp the implied clean estimate; without this the 1/sqrt(alpha)
            // amplification lets prediction error blow up along the chain
            double abar = sched.alpha_bar[static_cast<std::size_t>(t)];
            Tensor z0_hat = estimate_z0(z, t, eps_hat, sched);
            std::vector<double> clamped = z0_hat.data();
            for (double& v : clamped) v = std::clamp(v, -kSampleClip, kSampleClip);
            Tensor eps_eff = scale(add(z, scale(Tensor::from_data(z0_hat.shape(), std::move(clamped)),
                                                -std::sqrt(abar))),
                                   1.0 / std::sqrt(1.0 - abar));
            z = reverse_step(z, t, eps_eff, sched,
                             Rng::derive(chain_seed, static_cast<std::uint64_t>(t)),
                             /*deterministic=*/false, mask_ptr);
        }

        DecodeOutput dec = decode_distributions(model, z, cond.seq ? cond.seq->valid_len : L);
        SampleResult res;
        res.seq = assemble(dec);
        try {
            deserialize_sequence(res.seq);
            res.valid = true;
        } catch (const Error& e) {
            res.valid = false;
            res.error = e.what();
        }
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace gfcad
