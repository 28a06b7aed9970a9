#pragma once

#include <Eigen/Dense>

#include "pvvtt/core/tensor.hpp"

namespace pvvtt::dense {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Copy into Eigen's aligned storage. Vectorised kernels pick their loop
// peeling from the buffer address, so products over raw tensor memory could
// round differently from run to run.
inline RowMatrix owned(const Tensor& t) {
    return Eigen::Map<const RowMatrix>(t.data().data(), t.rows(), t.cols());
}

inline void add_into(Tensor& dst, const RowMatrix& m) {
    Eigen::Map<RowMatrix>(dst.data().data(), dst.rows(), dst.cols()) += m;
}

inline void assign(Tensor& dst, const RowMatrix& m) {
    Eigen::Map<RowMatrix>(dst.data().data(), dst.rows(), dst.cols()) = m;
}

} // namespace pvvtt::dense
