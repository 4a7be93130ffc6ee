#pragma once

#include <functional>

#include "gfcad/diffusion.hpp"

namespace gfcad {

struct TrainConfig {
    // desk-scale preset; the short schedule needs the larger beta_max so
    // alpha_bar(T) stays near zero and sampling can start from pure noise
    int T = 50;
    double beta_min = 1e-4;
    double beta_max = 0.2;
    double eta = 2.0;
    double lr = 1e-3;
    double beta1 = 0.95;
    double beta2 = 0.99;
    int batch = 16;
    int epochs = 100;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

// full-scale profile: T=1000 with the 1e-4..0.02 schedule, lr 1e-4,
// batch 512, 1000 epochs
TrainConfig paper_train_config();

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct StepMetrics {
    std::int64_t step = 0;
    LossBreakdown loss;
};

// Adam over the model parameters. One step = batch forward/backward with a
// fixed-order gradient reduction (results are independent of thread count),
// then a parameter update. State round-trips through checkpoints bit-exactly.
class Trainer {
public:
    Trainer(GMambaModel& model, TrainConfig cfg);

    StepMetrics step(const std::vector<TrainExample>& batch);

    // draws the next batch deterministically from the example pool
    std::vector<TrainExample> next_batch(const std::vector<TrainExample>& pool);

    std::int64_t step_count() const { return step_; }
    const DiffusionSchedule& schedule() const { return sched_; }
    const TrainConfig& config() const { return cfg_; }

    Checkpoint to_checkpoint() const;  // params + optimizer state + rng
    void load_from_checkpoint(const Checkpoint& ckpt);

private:
    GMambaModel& model_;
    TrainConfig cfg_;
    DiffusionSchedule sched_;
    LossWeights weights_;
    std::map<std::string, std::vector<double>> m_;
    std::map<std::string, std::vector<double>> v_;
    std::int64_t step_ = 0;
    Rng rng_;
};

struct AccuracyReport {
    double acc_cmd = 0;
    double acc_param = 0;
    double acc_line = 0;
    double acc_arc = 0;
    double acc_circle = 0;
    double acc_ext = 0;
};

// paired-mode evaluation: corrupt each ground-truth embedding at
// t_eval = max(1, round(T/10)) with seeded noise, denoise once, decode, and
// compare tokens. Accuracies are percentages over the relevant token sets.
AccuracyReport paired_accuracy(const GMambaModel& model, const DiffusionSchedule& sched,
                               const std::vector<TrainExample>& examples, std::uint64_t seed);

// token ownership classes for the per-primitive accuracies
enum class PrimOwner : std::uint8_t { None = 0, Line = 1, Arc = 2, Circle = 3, Extrusion = 4 };
std::vector<PrimOwner> token_primitives(const CadSequence& seq);

// token-level comparison counters behind paired_accuracy
struct AccuracyCounters {
    std::int64_t cmd_ok = 0, cmd_n = 0;
    std::int64_t par_ok = 0, par_n = 0;
    std::int64_t prim_ok[5] = {0, 0, 0, 0, 0};
    std::int64_t prim_n[5] = {0, 0, 0, 0, 0};

    void add(const CadSequence& gt, const std::vector<int>& pred_classes,
             const CadSequence& pred);
    AccuracyReport report() const;
};

}  // namespace gfcad
