#pragma once

#include <cstddef>

#include "pvvtt/core/random.hpp"
#include "pvvtt/core/tensor.hpp"

namespace pvvtt {

// Affine map y = W x + b with W stored [out x in].
struct MlpLayer {
    Tensor weight;
    Tensor bias;

    std::size_t in_dim() const noexcept { return weight.rank() == 2 ? weight.shape()[1] : 0; }
    std::size_t out_dim() const noexcept { return weight.rank() == 2 ? weight.shape()[0] : 0; }

    // W uniform in [-1/sqrt(in), 1/sqrt(in)], b = 0.
    static MlpLayer init(std::size_t out, std::size_t in, Rng& rng);
    static MlpLayer identity(std::size_t dim);

    friend bool operator==(const MlpLayer&, const MlpLayer&) = default;
};

// Per-feature affine parameters of a layer normalisation.
struct LayerNormParams {
    Tensor gain;
    Tensor bias;
    double eps = 1e-5;

    std::size_t dim() const noexcept { return gain.size(); }
    static LayerNormParams init(std::size_t dim);

    friend bool operator==(const LayerNormParams&, const LayerNormParams&) = default;
};

} // namespace pvvtt
