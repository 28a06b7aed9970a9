#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tensor.hpp"

namespace pvvtt {

// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
};

// Parameter gradients keyed by the address of the parameter tensor.
class Gradients {
public:
    // Gradient for `param`; an all-zero tensor when it never reached the loss.
    Tensor of(const Tensor& param) const;
    const Tensor* find(const Tensor& param) const;
    void accumulate(const Tensor& param, const Tensor& grad);
    std::size_t size() const noexcept { return grads_.size(); }

private:
    std::unordered_map<const Tensor*, Tensor> grads_;
};

// Reverse-mode recorder over a closed operation set. Every operation appends
// one node holding its value and an adjoint rule; backward() replays the rules
// in exact reverse order and accumulates additively into shared inputs.
//
// Broadcasting is limited to one case: a single-row operand of mul/add is
// repeated across the rows of the other operand.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var constant(Tensor value);
    // Registers a parameter; repeated registration of the same tensor returns
    // the same node. The tensor must outlive backward().
    Var parameter(const Tensor& param);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    std::size_t size() const noexcept { return nodes_.size(); }

    Var affine(const MlpLayer& layer, Var x);
    Var mul(Var a, Var b);
    Var add(Var a, Var b);
    Var mean(std::span<const Var> xs);
    Var concat(std::span<const Var> xs);
    Var gather_rows(Var x, std::vector<std::size_t> rows);
    Var softmax(Var x);
    Var layer_norm(Var x, const LayerNormParams& params);
    Var gelu(Var x);

    // Scaled dot-product attention. q is [batches*Lq x d], k and v are
    // [batches*Lk x d]; rows of each batch are contiguous. Heads split d
    // evenly. When `weights` is non-null it receives the attention
    // probabilities as [batches*heads*Lq x Lk].
    Var attention(Var q, Var k, Var v, std::size_t batches, std::size_t heads,
                  Tensor* weights = nullptr);

    // Mean over rows of -log(max(probs[r, labels[r]], floor)).
    Var cross_entropy(Var probs, std::vector<int> labels, double floor = 1e-12);

    // Mean over the given row pairs of the squared L2 distance between rows.
    // Zero (a constant) when `pairs` is empty.
    Var pair_squared_distance(Var x, std::vector<std::pair<std::size_t, std::size_t>> pairs);

    Var sum(Var x);
    Var scale(Var x, double factor);
    Var linear_combination(Var a, double wa, Var b, double wb);

    // Throws UsageError unless root holds exactly one value.
    Gradients backward(Var root);

private:
    using Adjoint = std::function<void(Tape&, std::size_t)>;

    struct Node {
        Tensor value;
        Tensor grad;
        Adjoint adjoint;
        const Tensor* param = nullptr;
        bool requires_grad = false;
    };

    Var push(Tensor value, bool requires_grad, Adjoint adjoint);
    bool needs(Var v) const { return nodes_[v.id].requires_grad; }
    Tensor& grad(std::size_t id);

    std::vector<Node> nodes_;
    std::unordered_map<const Tensor*, std::size_t> param_ids_;
};

} // namespace pvvtt
