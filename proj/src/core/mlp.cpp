#include "pvvtt/core/mlp.hpp"

#include <cmath>

namespace pvvtt {

MlpLayer MlpLayer::init(std::size_t out, std::size_t in, Rng& rng) {
    MlpLayer layer{Tensor({out, in}), Tensor({out})};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    return layer;
}

MlpLayer MlpLayer::identity(std::size_t dim) {
    MlpLayer layer{Tensor({dim, dim}), Tensor({dim})};
    for (std::size_t i = 0; i < dim; ++i) layer.weight.at(i, i) = 1.0;
    return layer;
}

LayerNormParams LayerNormParams::init(std::size_t dim) {
    return {Tensor::filled({dim}, 1.0), Tensor({dim}), 1e-5};
}

} // namespace pvvtt
