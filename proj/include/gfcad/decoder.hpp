#pragma once

#include "gfcad/model.hpp"

namespace gfcad {

// command + argument head outputs; probability rows each sum to 1 and the
// argument probabilities hold two V-way softmax groups side by side
struct DecodeOutput {
    Tensor cmd_logits;  // L x n_cmd
    Tensor arg_logits;  // L x 2V
    Tensor cmd_probs;
    Tensor arg_probs;
    std::vector<std::uint8_t> row_valid;  // padded rows emitted but flagged
};

DecodeOutput decode_distributions(const GMambaModel& model, const Tensor& zhat, int valid_len);

// argmax assembly into a discrete sequence; position 0 is constrained to cls
// and ties break to the lowest class index. Output may be grammar-invalid.
CadSequence assemble(const DecodeOutput& out);

}  // namespace gfcad
