#pragma once

#include <optional>
#include <utility>

#include "gfcad/decoder.hpp"
#include "gfcad/model.hpp"

namespace gfcad {

// Linear-beta DDPM schedule. beta/alpha/sigma are indexed 1..T (index 0 is
// the t=0 convention slot: alpha_bar[0] = 1). The final reverse step is
// noiseless (sigma[1] = 0).
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sigma;

    static DiffusionSchedule linear(int T, double beta_min = 1e-4, double beta_max = 0.02);
};

struct LossWeights {
    double eta = 2.0;  // argument-loss weight
};

// Z_t = sqrt(abar_t) Z_0 + sqrt(1 - abar_t) eps, eps ~ N(0, I) seeded; rows
// outside the mask stay exactly zero. Returns (Z_t, eps).
std::pair<Tensor, Tensor> forward_sample(const Tensor& Z0, int t, const DiffusionSchedule& sched,
                                         std::uint64_t seed,
                                         const std::vector<std::uint8_t>* row_mask = nullptr);

Tensor reverse_step(const Tensor& Zt, int t, const Tensor& eps_hat,
                    const DiffusionSchedule& sched, std::uint64_t seed, bool deterministic,
                    const std::vector<std::uint8_t>* row_mask = nullptr);

// closed-form inversion of the forward process
Tensor estimate_z0(const Tensor& Zt, int t, const Tensor& eps_hat,
                   const DiffusionSchedule& sched);

struct TrainExample {
    const CadSequence* seq = nullptr;
    const GeomDescriptors* desc = nullptr;
};

struct LossBreakdown {
    double total = 0;
    double diffusion = 0;
    double command = 0;
    double args = 0;
};

// one batch element's composite loss with its timestep already drawn
Tensor example_loss(const GMambaModel& model, const TrainExample& ex, int t,
                    const DiffusionSchedule& sched, const LossWeights& weights,
                    std::uint64_t noise_seed, LossBreakdown* breakdown = nullptr);

// batch mean of example losses; timesteps are drawn uniformly from [1,T]
// using the given seed, so the value is a pure function of (params, seed)
Tensor total_loss(const GMambaModel& model, const std::vector<TrainExample>& batch,
                  const DiffusionSchedule& sched, const LossWeights& weights,
                  std::uint64_t seed, LossBreakdown* breakdown = nullptr);

struct SampleResult {
    CadSequence seq;
    bool valid = false;
    std::string error;
};

// entrywise bound applied to the implied clean estimate during sampling
inline constexpr double kSampleClip = 6.0;

// reverse chain from pure noise; per-sample conditioning may be teacher-forced
// from reference sequences, otherwise the neutral conditioning is used
std::vector<SampleResult> sample(const GMambaModel& model, const DiffusionSchedule& sched,
                                 int n, std::uint64_t seed,
                                 const std::vector<Conditioning>* teacher = nullptr);

}  // namespace gfcad
