#pragma once

#include <cstdint>
#include <vector>

#include "gfcad/tensor.hpp"

namespace gfcad {

// Elementwise add/mul accept equal shapes or a row vector ({D} or {1,D})
// broadcast over the rows of an {L,D} left operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps = 1e-8);

// causal depthwise conv: out[l,d] = sum_k w[k,d] * x[l-k,d], x left-padded
Tensor dwconv_causal(const Tensor& x, const Tensor& w);

Tensor embedding_rows(const Tensor& table, const std::vector<int>& indices);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor slice_rows(const Tensor& x, int r0, int r1);

Tensor sum_all(const Tensor& x);

// zero out rows where mask is 0
Tensor mask_rows(const Tensor& x, const std::vector<std::uint8_t>& mask);

// mean of (pred - target)^2 over entries of rows with mask != 0
Tensor mse_masked(const Tensor& pred, const Tensor& target,
                  const std::vector<std::uint8_t>& row_mask);

// mean over unmasked rows of -log softmax(logits)[target]
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<std::uint8_t>& row_mask);

// diagonal linear recurrence. Returns S with S[0] = 0 and
// S[k] = A[k-1] * S[k-1] + B[k-1] * X[k-1]; row k is the state seen by
// position k before it is absorbed.
Tensor linear_scan(const Tensor& A, const Tensor& B, const Tensor& X);

}  // namespace gfcad
