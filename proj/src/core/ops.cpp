#include "pvvtt/core/ops.hpp"

#include <algorithm>
#include <cmath>

#include "dense.hpp"

#include "pvvtt/errors.hpp"

namespace pvvtt::ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

} // namespace

Tensor affine(const MlpLayer& layer, const Tensor& x) {
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    if (x.cols() != in || x.rank() == 0 || x.rank() > 2) {
        throw DimensionError("affine: input " + x.shape_string() + " does not match weight " +
                             layer.weight.shape_string());
    }
    const std::size_t n = x.rows();
    Tensor y = x.rank() == 1 ? Tensor({out}) : Tensor({n, out});
    dense::RowMatrix Y = dense::owned(x) * dense::owned(layer.weight).transpose();
    dense::assign(y, Y);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out; ++o) y[r * out + o] += layer.bias[o];
    }
    return y;
}

Tensor elementwise_product(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "elementwise_product");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

Tensor mean_stack(std::span<const Tensor> values) {
    if (values.empty()) throw AggregationError("mean_stack: empty input list");
    Tensor acc = values.front();
    for (std::size_t k = 1; k < values.size(); ++k) {
        require_same_shape(acc, values[k], "mean_stack");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += values[k][i];
    }
    const double inv = 1.0 / static_cast<double>(values.size());
    for (double& v : acc.data()) v *= inv;
    return acc;
}

Tensor softmax(const Tensor& x) {
    if (x.empty()) throw DimensionError("softmax: empty input");
    Tensor y = x;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return y;
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& params) {
    const std::size_t d = x.cols();
    if (params.dim() != d) {
        throw DimensionError("layer_norm: input " + x.shape_string() + " vs gain " +
                             params.gain.shape_string());
    }
    Tensor y = x;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d);
        const double inv_std = 1.0 / std::sqrt(var + params.eps);
        for (std::size_t i = 0; i < d; ++i) {
            row[i] = (row[i] - mean) * inv_std * params.gain[i] + params.bias[i];
        }
    }
    return y;
}

Tensor gelu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data()) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
    return y;
}

Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw AggregationError("concat: empty input list");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows || p.rank() != parts.front().rank()) {
            throw DimensionError("concat: row mismatch " + p.shape_string() + " vs " +
                                 parts.front().shape_string());
        }
        cols += p.cols();
    }
    Tensor out = parts.front().rank() == 1 ? Tensor({cols}) : Tensor({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (const auto& p : parts) {
            auto src = p.row(r);
            std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<long>(offset));
            offset += p.cols();
        }
    }
    return out;
}

} // namespace pvvtt::ops
