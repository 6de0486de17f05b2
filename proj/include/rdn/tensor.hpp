#pragma once

// Rank-4 float tensor with a define-by-run autodiff graph.
//
// A Tensor is a cheap shared handle to a node. Ops record their inputs and a
// backward closure on the result node while gradient recording is enabled;
// backward() walks the recorded graph in reverse topological order and
// accumulates into the grad buffers of every node that requires grad.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rdn/error.hpp"

namespace rdn {

struct Shape4 {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    constexpr std::size_t numel() const noexcept { return n * c * h * w; }
    constexpr std::size_t plane() const noexcept { return h * w; }
    constexpr bool operator==(const Shape4&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }
};

namespace detail {

inline thread_local bool grad_mode_enabled = true;

struct Node {
    Shape4 shape;
    std::vector<float> value;
    std::vector<float> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;

    std::span<float> ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0f);
        return grad;
    }
};

}  // namespace detail

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard() : previous_(detail::grad_mode_enabled) { detail::grad_mode_enabled = false; }
    ~NoGradGuard() { detail::grad_mode_enabled = previous_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

inline bool grad_enabled() noexcept { return detail::grad_mode_enabled; }

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape4 shape, bool requires_grad = false) {
        return from_data(shape, std::vector<float>(shape.numel(), 0.0f), requires_grad);
    }

    static Tensor full(Shape4 shape, float v, bool requires_grad = false) {
        return from_data(shape, std::vector<float>(shape.numel(), v), requires_grad);
    }

    static Tensor from_data(Shape4 shape, std::vector<float> data, bool requires_grad = false) {
        if (data.size() != shape.numel()) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape.str());
        }
        auto node = std::make_shared<detail::Node>();
        node->shape = shape;
        node->value = std::move(data);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    /// Result of an op. Links the graph only when recording and some input needs grad.
    static Tensor make_result(Shape4 shape, std::vector<float> data, std::vector<Tensor> inputs,
                              std::function<void(detail::Node&)> backward_fn) {
        Tensor out = from_data(shape, std::move(data));
        if (!grad_enabled()) return out;
        bool any = false;
        for (const auto& in : inputs) any = any || in.requires_grad();
        if (!any) return out;
        auto& node = *out.node_;
        node.requires_grad = true;
        node.is_leaf = false;
        node.inputs.reserve(inputs.size());
        for (auto& in : inputs) node.inputs.push_back(in.node_);
        node.backward_fn = std::move(backward_fn);
        return out;
    }

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape4& shape() const { return node().shape; }
    std::size_t numel() const { return node().shape.numel(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool is_leaf() const { return node().is_leaf; }

    std::span<const float> data() const { return node().value; }
    /// Writable storage. Intended for initialization and optimizer updates of leaves.
    std::span<float> mutable_data() { return node().value; }

    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const float> grad() const { return node().grad; }
    std::span<float> mutable_grad() { return node().ensure_grad(); }
    void zero_grad() {
        auto& g = node().grad;
        std::fill(g.begin(), g.end(), 0.0f);
    }

    float item() const {
        if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
        return node().value[0];
    }

    float at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        const auto& s = shape();
        return node().value[((n * s.c + c) * s.h + y) * s.w + x];
    }

    /// Copy of the values with no graph linkage.
    Tensor detach() const { return from_data(shape(), node().value, false); }

    /// Deep copy of a leaf: same values, same requires_grad, no grad buffer.
    Tensor clone() const { return from_data(shape(), node().value, requires_grad()); }

    /// Reverse-mode pass from a single-element tensor. Leaf grads accumulate across calls;
    /// intermediate grads are reset per call. Unless retain_graph is set, the recorded
    /// graph behind this tensor is released afterwards.
    void backward(bool retain_graph = false) const;

    detail::Node& node() const {
        if (!node_) throw Error("use of undefined tensor");
        return *node_;
    }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;
};

inline void Tensor::backward(bool retain_graph) const {
    auto& root = node();
    if (root.value.size() != 1) {
        throw ShapeError("backward() requires a single-element tensor, got shape " + root.shape.str());
    }
    if (!root.requires_grad) return;
    if (!root.is_leaf && !root.backward_fn) {
        throw Error("backward() through a released graph; use retain_graph on the first call");
    }

    // Iterative post-order DFS gives a topological order (inputs before users).
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{&root, 0}};
    visited.insert(&root);
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            detail::Node* child = n->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (auto* n : order) {
        if (!n->is_leaf) n->grad.clear();
    }
    if (root.is_leaf) {
        root.ensure_grad()[0] += 1.0f;
        return;
    }
    root.ensure_grad()[0] = 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->is_leaf || n->grad.empty() || !n->backward_fn) continue;
        n->backward_fn(*n);
    }
    for (auto* n : order) {
        if (n->is_leaf) continue;
        n->grad.clear();
        n->grad.shrink_to_fit();
        if (!retain_graph) {
            n->backward_fn = nullptr;
            n->inputs.clear();
        }
    }
}

}  // namespace rdn
