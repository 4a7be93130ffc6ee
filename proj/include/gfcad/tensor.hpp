#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "gfcad/common.hpp"

namespace gfcad {

// Numeric mode. F32 keeps double storage but rounds every op result through
// float, giving a deterministic single-precision emulation; F64 is exact
// double and is what the acceptance suite runs under.
enum class Precision { F64, F32 };
Precision get_precision();
void set_precision(Precision p);

// live/peak tensor byte counters (for the scaling benchmark)
std::size_t tensor_bytes_live();
std::size_t tensor_bytes_peak();
void reset_tensor_bytes_peak();

struct TensorNode;
using GradMap = std::unordered_map<const TensorNode*, std::vector<double>>;

struct TensorNode {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // filled by backward() on requires_grad nodes
    bool requires_grad = false;

    std::vector<std::shared_ptr<TensorNode>> inputs;
    std::function<void(const TensorNode&, GradMap&)> backprop;

    TensorNode(std::vector<int> s, std::vector<double> v);
    ~TensorNode();
    TensorNode(const TensorNode&) = delete;
    TensorNode& operator=(const TensorNode&) = delete;

    std::size_t numel() const { return values.size(); }
};

// Value-semantics handle over an immutable node. All ops are pure functions;
// with gradients enabled they record the reverse pass on the result node.
class Tensor {
public:
    Tensor() = default;

    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0,
                        bool requires_grad = false);
    static Tensor scalar(double v) { return from_data({1}, {v}); }

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    const std::vector<double>& data() const { return node_->values; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    int rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
    int cols() const { return node_->shape.size() < 2 ? 1 : node_->shape[1]; }
    std::size_t numel() const { return node_->numel(); }
    double item() const;

    // in-place mutation for optimizers; only valid on leaf parameters
    void update_values(const std::vector<double>& new_values);
    void zero_grad();

    TensorNode* node() const { return node_.get(); }
    std::shared_ptr<TensorNode> shared() const { return node_; }
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<TensorNode> node_;
};

// reverse pass from a scalar; fills .grad on every requires_grad node
void backward(const Tensor& loss);
// same pass but into an external sink; shared parameter nodes stay untouched,
// which lets batch elements run on worker threads
void backward_collect(const Tensor& loss, GradMap& sink);

bool grad_enabled();
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

}  // namespace gfcad
