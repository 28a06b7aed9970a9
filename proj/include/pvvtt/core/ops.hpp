#pragma once

#include <span>
#include <vector>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tensor.hpp"

// Value-only versions of the operation set. The tape records the same
// computations with adjoints; these are for inference paths and tests.
namespace pvvtt::ops {

// W x + b. x is a length-in vector or an [n x in] matrix of row vectors.
Tensor affine(const MlpLayer& layer, const Tensor& x);

Tensor elementwise_product(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);

// Element-wise arithmetic mean. Throws AggregationError on an empty list.
Tensor mean_stack(std::span<const Tensor> values);

// Softmax over the last axis, max-subtracted.
Tensor softmax(const Tensor& x);

Tensor layer_norm(const Tensor& x, const LayerNormParams& params);

// Exact GELU, x * Phi(x).
Tensor gelu(const Tensor& x);

// Concatenates along the last axis; all inputs need the same row count.
Tensor concat(std::span<const Tensor> parts);

} // namespace pvvtt::ops
