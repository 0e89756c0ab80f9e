#pragma once

// Reverse-mode automatic differentiation over dense float64 tensors.
//
// A Graph records every primitive application in creation order, which is a
// topological order. backward() walks the nodes in exact reverse creation
// order and sums gradient contributions, so results are bitwise reproducible.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mspl/tensor.hpp"

namespace mspl::ad {

/// A trainable array owned outside any graph. Graph::parameter() reads its
/// value; Graph::backward() adds into its grad.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
    void zero_grad() { grad.fill(0.0); }
};

class Graph;

/// Handle to a node of a Graph.
struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

class Graph {
public:
    // out_grad is the gradient of the node; in_grads[i] is null when input i
    // does not require a gradient, otherwise contributions are added to it.
    using BackwardFn = std::function<void(const Tensor& out_grad, std::span<Tensor* const> in_grads)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    Var input(Tensor value, bool requires_grad);
    Var parameter(Parameter& p);

    Var record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const;
    /// Gradient of the last backward() w.r.t. the node; empty if none.
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const;
    const std::string& op_name(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Accumulates d(loss)/d(node) for every node requiring gradients and adds
    /// the parameter leaf gradients into their Parameter::grad.
    void backward(Var loss);

private:
    struct Node {
        std::string op;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    Var push(Node node);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
};

// Primitive catalog. Every function appends one node to the graph of its
// arguments and throws UsageError naming the op and shapes on mismatch.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sq_diff(Var a, Var b);
Var relu(Var a);

/// [M, K] x [K, N] -> [M, N]
Var matmul(Var a, Var b);
/// Adds bias[C] along axis 1 of an [N, C] or [N, C, L] tensor.
Var add_bias(Var a, Var bias);

/// x: [N, Cin, L], weight: [Cout, Cin, K], bias: [Cout] -> [N, Cout, Lout],
/// Lout = floor((L + 2 pad - K) / stride) + 1, zero padding.
Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t pad);
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t pad);
/// Nearest-neighbour upsampling x2 along the last axis of [N, C, L].
Var upsample2(Var x);
/// Concatenation along axis 1 of two rank-2 or two rank-3 tensors.
Var concat_channels(Var a, Var b);
/// [N, ...] -> [N, prod(...)]
Var flatten(Var x);
Var softmax_rows(Var x);

Var sum(Var x);
Var mean(Var x);

/// Mean softmax cross-entropy of [N, K] logits against integer labels.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
/// Euclidean distance between every pair of rows of [N, D] -> [N, N].
/// The gradient of a zero distance is taken as zero.
Var pdist_rows(Var h);

}  // namespace mspl::ad
