#pragma once

#include <map>
#include <string>

#include "gfcad/cad_types.hpp"
#include "gfcad/checkpoint.hpp"
#include "gfcad/geometry.hpp"
#include "gfcad/ops.hpp"

namespace gfcad {

enum class Variant { GMamba, VanillaSSD };

struct ModelConfig {
    int n_blocks = 4;
    int d_e = 64;
    int d_c = 16;
    Variant variant = Variant::GMamba;
    bool film_enabled = true;
    int conv_kernel = 4;  // K
    int n_ts = kDefaultMaxTokens;
    int vocab = tok::kVocabSize;  // V

    int kernel_width() const { return 4 * d_e; }  // A,B,C,G stacked
};

// paper-scale profile: 12 blocks at width 256
ModelConfig paper_model_config();

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Per-token diagonal transition kernels plus the hierarchy embedding; A is
// already squashed into (0,1).
struct KernelSet {
    Tensor A, B, C, G;  // each L x d_e
    Tensor pi;          // L x d_e; undefined for the vanilla variant
    std::vector<std::uint8_t> mask;  // row validity (padding)
    bool use_gsm = true;             // vanilla bypasses the GSM output path
};

// conditioning inputs; null members select the neutral conditioning used by
// unconditional sampling
struct Conditioning {
    const CadSequence* seq = nullptr;
    const GeomDescriptors* desc = nullptr;
};

class GMambaModel {
public:
    GMambaModel() = default;
    explicit GMambaModel(ModelConfig cfg) : cfg_(cfg) {}

    void init_params(std::uint64_t seed);
    bool initialized() const { return !params_.empty(); }

    const ModelConfig& config() const { return cfg_; }
    const std::map<std::string, Tensor>& params() const { return params_; }
    Tensor param(const std::string& name) const;

    // geometry embedding: one-hot pair + type/step columns through W_emb,
    // plus the learnable positional table; rows past valid_len are zero
    Tensor embed(const CadSequence& seq) const;

    KernelSet make_kernels(const Conditioning& cond, int t, int L) const;

    // one GSM-SSD block application (dwconv -> scan -> mix); exposed for the
    // reference-recurrence oracle
    Tensor gsm_ssd_scan(const Tensor& Z, const KernelSet& ks, int block) const;

    // full denoiser stack
    Tensor denoise(const Tensor& Zt, int t, const Conditioning& cond) const;

    Checkpoint to_checkpoint() const;
    void load_from_checkpoint(const Checkpoint& ckpt);

private:
    Tensor film_psi(int t) const;  // 1 x 4*d_e multiplier, or undefined

    ModelConfig cfg_;
    std::map<std::string, Tensor> params_;
};

inline constexpr int kFilmTimeFeatures = 32;

}  // namespace gfcad
