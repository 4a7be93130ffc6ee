#include "gfcad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace gfcad {

namespace {

std::atomic<Precision> g_precision{Precision::F64};
std::atomic<std::size_t> g_bytes_live{0};
std::atomic<std::size_t> g_bytes_peak{0};
thread_local bool g_grad_enabled = true;

void track_alloc(std::size_t bytes) {
    std::size_t live = g_bytes_live.fetch_add(bytes) + bytes;
    std::size_t peak = g_bytes_peak.load();
    while (live > peak && !g_bytes_peak.compare_exchange_weak(peak, live)) {
    }
}

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) {
        check(s > 0, ErrorKind::Numeric, "tensor shape extent must be positive");
        n *= static_cast<std::size_t>(s);
    }
    return n;
}

}  // namespace

Precision get_precision() { return g_precision.load(); }
void set_precision(Precision p) { g_precision.store(p); }

std::size_t tensor_bytes_live() { return g_bytes_live.load(); }
std::size_t tensor_bytes_peak() { return g_bytes_peak.load(); }
void reset_tensor_bytes_peak() { g_bytes_peak.store(g_bytes_live.load()); }

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

TensorNode::TensorNode(std::vector<int> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
    check(shape_numel(shape) == values.size(), ErrorKind::Numeric,
          "tensor data length does not match shape");
    track_alloc(values.size() * sizeof(double));
}

TensorNode::~TensorNode() {
    g_bytes_live.fetch_sub((values.size() + grad.size()) * sizeof(double));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (get_precision() == Precision::F32) {
        for (double& v : data) v = static_cast<double>(static_cast<float>(v));
    }
    auto node = std::make_shared<TensorNode>(std::move(shape), std::move(data));
    node->requires_grad = requires_grad && grad_enabled();
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (double& v : data) v = rng.normal() * stddev;
    return from_data(std::move(shape), std::move(data), requires_grad);
}

double Tensor::item() const {
    check(node_ && node_->numel() == 1, ErrorKind::Numeric, "item() requires a scalar tensor");
    return node_->values[0];
}

void Tensor::update_values(const std::vector<double>& new_values) {
    check(node_ && new_values.size() == node_->values.size(), ErrorKind::Numeric,
          "update_values: size mismatch");
    check(!node_->backprop, ErrorKind::Numeric, "update_values: not a leaf tensor");
    if (get_precision() == Precision::F32) {
        for (std::size_t i = 0; i < new_values.size(); ++i) {
            node_->values[i] = static_cast<double>(static_cast<float>(new_values[i]));
        }
    } else {
        node_->values = new_values;
    }
}

void Tensor::zero_grad() {
    if (node_) node_->grad.clear();
}

namespace {

std::vector<const TensorNode*> topo_order(const TensorNode* root) {
    // iterative post-order DFS; deterministic given graph construction
    std::vector<const TensorNode*> order;
    std::unordered_set<const TensorNode*> visited;
    std::vector<std::pair<const TensorNode*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            const TensorNode* child = node->inputs[next].get();
            ++next;
            if (!visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // inputs before consumers
}

void run_backward(const Tensor& loss, GradMap& gmap) {
    check(loss.defined(), ErrorKind::Numeric, "backward: undefined tensor");
    check(loss.numel() == 1, ErrorKind::Numeric, "backward requires a scalar loss");
    auto order = topo_order(loss.node());
    gmap[loss.node()] = {1.0};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const TensorNode* node = *it;
        if (!node->backprop) continue;
        auto found = gmap.find(node);
        if (found == gmap.end()) continue;  // no gradient flowed here
        node->backprop(*node, gmap);
    }
}

}  // namespace

void backward(const Tensor& loss) {
    GradMap gmap;
    run_backward(loss, gmap);
    for (auto& [node, grad] : gmap) {
        if (node->requires_grad) {
            auto* mutable_node = const_cast<TensorNode*>(node);
            if (mutable_node->grad.empty()) track_alloc(grad.size() * sizeof(double));
            mutable_node->grad = grad;
        }
    }
}

void backward_collect(const Tensor& loss, GradMap& sink) {
    GradMap gmap;
    run_backward(loss, gmap);
    for (auto& [node, grad] : gmap) {
        if (!node->requires_grad) continue;
        auto it = sink.find(node);
        if (it == sink.end()) {
            sink.emplace(node, std::move(grad));
        } else {
            for (std::size_t i = 0; i < grad.size(); ++i) it->second[i] += grad[i];
        }
    }
}

}  // namespace gfcad
