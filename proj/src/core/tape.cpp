#include "pvvtt/core/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dense.hpp"

#include "pvvtt/core/ops.hpp"
#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {


// Row-broadcast compatibility for mul/add. Returns the output shape.
std::vector<std::size_t> broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return a.shape();
    if (a.cols() == b.cols()) {
        if (b.rows() == 1) return a.shape();
        if (a.rows() == 1) return b.shape();
    }
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
}

// Adds `g` (output-shaped) into `target`, summing over rows when target is a
// broadcast single row.
void accumulate_broadcast(Tensor& target, const Tensor& g) {
    if (target.size() == g.size()) {
        for (std::size_t i = 0; i < g.size(); ++i) target[i] += g[i];
        return;
    }
    const std::size_t cols = g.cols();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < cols; ++c) target[c] += row[c];
    }
}

} // namespace

Tensor Gradients::of(const Tensor& param) const {
    if (auto it = grads_.find(&param); it != grads_.end()) return it->second;
    return Tensor::zeros_like(param);
}

const Tensor* Gradients::find(const Tensor& param) const {
    auto it = grads_.find(&param);
    return it == grads_.end() ? nullptr : &it->second;
}

void Gradients::accumulate(const Tensor& param, const Tensor& grad) {
    auto [it, inserted] = grads_.try_emplace(&param, grad);
    if (!inserted) {
        for (std::size_t i = 0; i < grad.size(); ++i) it->second[i] += grad[i];
    }
}

Var Tape::push(Tensor value, bool requires_grad, Adjoint adjoint) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(adjoint), nullptr, requires_grad});
    return Var{nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(const Tensor& param) {
    if (auto it = param_ids_.find(&param); it != param_ids_.end()) return Var{it->second};
    Var v = push(param, true, nullptr);
    nodes_[v.id].param = &param;
    param_ids_.emplace(&param, v.id);
    return v;
}

Var Tape::affine(const MlpLayer& layer, Var x) {
    Tensor y = ops::affine(layer, value(x));
    Var w = parameter(layer.weight);
    Var b = parameter(layer.bias);
    return push(std::move(y), true, [x, w, b](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const dense::RowMatrix dY = dense::owned(dy);
        {
            Tensor& gw = t.grad(w.id);
            // rank-1 inputs are a single row
            dense::add_into(gw, dY.transpose() * dense::owned(t.value(x)));
        }
        {
            Tensor& gb = t.grad(b.id);
            for (std::size_t r = 0; r < dy.rows(); ++r) {
                for (std::size_t c = 0; c < dy.cols(); ++c) gb[c] += dy[r * dy.cols() + c];
            }
        }
        if (t.needs(x)) {
            Tensor& gx = t.grad(x.id);
            dense::add_into(gx, dY * dense::owned(t.value(w)));
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    Tensor y(broadcast_shape(va, vb, "mul"));
    const std::size_t cols = y.cols();
    const bool a_bc = va.size() != y.size();
    const bool b_bc = vb.size() != y.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = va[a_bc ? i % cols : i] * vb[b_bc ? i % cols : i];
    }
    const bool rg = needs(a) || needs(b);
    return push(std::move(y), rg, [a, b, a_bc, b_bc](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const std::size_t cols = dy.cols();
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        if (t.needs(a)) {
            Tensor g = Tensor::zeros_like(dy);
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] = dy[i] * vb[b_bc ? i % cols : i];
            accumulate_broadcast(t.grad(a.id), g);
        }
        if (t.needs(b)) {
            Tensor g = Tensor::zeros_like(dy);
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] = dy[i] * va[a_bc ? i % cols : i];
            accumulate_broadcast(t.grad(b.id), g);
        }
    });
}

Var Tape::add(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    Tensor y(broadcast_shape(va, vb, "add"));
    const std::size_t cols = y.cols();
    const bool a_bc = va.size() != y.size();
    const bool b_bc = vb.size() != y.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = va[a_bc ? i % cols : i] + vb[b_bc ? i % cols : i];
    }
    const bool rg = needs(a) || needs(b);
    return push(std::move(y), rg, [a, b](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        if (t.needs(a)) accumulate_broadcast(t.grad(a.id), dy);
        if (t.needs(b)) accumulate_broadcast(t.grad(b.id), dy);
    });
}

Var Tape::mean(std::span<const Var> xs) {
    if (xs.empty()) throw AggregationError("mean: node has no inputs to aggregate");
    std::vector<Tensor> vals;
    vals.reserve(xs.size());
    bool rg = false;
    for (Var x : xs) {
        vals.push_back(value(x));
        rg = rg || needs(x);
    }
    Tensor y = ops::mean_stack(vals);
    std::vector<Var> inputs(xs.begin(), xs.end());
    return push(std::move(y), rg, [inputs = std::move(inputs)](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const double inv = 1.0 / static_cast<double>(inputs.size());
        for (Var x : inputs) {
            if (!t.needs(x)) continue;
            Tensor& g = t.grad(x.id);
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * inv;
        }
    });
}

Var Tape::concat(std::span<const Var> xs) {
    std::vector<Tensor> vals;
    bool rg = false;
    for (Var x : xs) {
        vals.push_back(value(x));
        rg = rg || needs(x);
    }
    Tensor y = ops::concat(vals);
    std::vector<Var> inputs(xs.begin(), xs.end());
    return push(std::move(y), rg, [inputs = std::move(inputs)](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        std::size_t offset = 0;
        for (Var x : inputs) {
            const std::size_t cols = t.value(x).cols();
            if (t.needs(x)) {
                Tensor& g = t.grad(x.id);
                for (std::size_t r = 0; r < dy.rows(); ++r) {
                    auto src = dy.row(r);
                    auto dst = g.row(r);
                    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[offset + c];
                }
            }
            offset += cols;
        }
    });
}

Var Tape::gather_rows(Var x, std::vector<std::size_t> rows) {
    const Tensor& vx = value(x);
    const std::size_t cols = vx.cols();
    Tensor y({rows.size(), cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= vx.rows()) {
            throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                             vx.shape_string());
        }
        auto src = vx.row(rows[i]);
        std::copy(src.begin(), src.end(), y.row(i).begin());
    }
    return push(std::move(y), needs(x), [x, rows = std::move(rows)](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        Tensor& g = t.grad(x.id);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = dy.row(i);
            auto dst = g.row(rows[i]);
            for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
    });
}

Var Tape::softmax(Var x) {
    Tensor y = ops::softmax(value(x));
    return push(std::move(y), needs(x), [x](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& g = t.grad(x.id);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            auto yr = y.row(r);
            auto dr = dy.row(r);
            auto gr = g.row(r);
            double dot = 0.0;
            for (std::size_t c = 0; c < yr.size(); ++c) dot += dr[c] * yr[c];
            for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += yr[c] * (dr[c] - dot);
        }
    });
}

Var Tape::layer_norm(Var x, const LayerNormParams& params) {
    const Tensor& vx = value(x);
    const std::size_t d = vx.cols();
    if (params.dim() != d) {
        throw DimensionError("layer_norm: input " + vx.shape_string() + " vs gain " +
                             params.gain.shape_string());
    }
    auto xhat = std::make_shared<Tensor>(vx);
    auto inv_std = std::make_shared<std::vector<double>>(vx.rows());
    Tensor y = vx;
    for (std::size_t r = 0; r < vx.rows(); ++r) {
        auto row = xhat->row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + params.eps);
        (*inv_std)[r] = is;
        auto yr = y.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            row[i] = (row[i] - mean) * is;
            yr[i] = row[i] * params.gain[i] + params.bias[i];
        }
    }
    Var gain = parameter(params.gain);
    Var bias = parameter(params.bias);
    return push(std::move(y), true, [x, gain, bias, xhat, inv_std](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const Tensor& gv = t.value(gain);
        const std::size_t d = dy.cols();
        Tensor& gg = t.grad(gain.id);
        Tensor& gb = t.grad(bias.id);
        const bool want_x = t.needs(x);
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < dy.rows(); ++r) {
            auto dr = dy.row(r);
            auto xr = xhat->row(r);
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                gg[i] += dr[i] * xr[i];
                gb[i] += dr[i];
                dxhat[i] = dr[i] * gv[i];
                sum_dxhat += dxhat[i];
                sum_dxhat_xhat += dxhat[i] * xr[i];
            }
            if (!want_x) continue;
            auto gx = t.grad(x.id).row(r);
            const double k = (*inv_std)[r] / static_cast<double>(d);
            for (std::size_t i = 0; i < d; ++i) {
                gx[i] += k * (static_cast<double>(d) * dxhat[i] - sum_dxhat - xr[i] * sum_dxhat_xhat);
            }
        }
    });
}

Var Tape::gelu(Var x) {
    Tensor y = ops::gelu(value(x));
    return push(std::move(y), needs(x), [x](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const Tensor& vx = t.value(x);
        Tensor& g = t.grad(x.id);
        constexpr double inv_sqrt_2pi = 0.39894228040143267794;
        for (std::size_t i = 0; i < dy.size(); ++i) {
            const double v = vx[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            g[i] += dy[i] * (cdf + v * pdf);
        }
    });
}

Var Tape::attention(Var q, Var k, Var v, std::size_t batches, std::size_t heads, Tensor* weights) {
    const Tensor& vq = value(q);
    const Tensor& vk = value(k);
    const Tensor& vv = value(v);
    const std::size_t d = vq.cols();
    if (vk.cols() != d || vv.cols() != d || vk.rows() != vv.rows()) {
        throw DimensionError("attention: q " + vq.shape_string() + ", k " + vk.shape_string() +
                             ", v " + vv.shape_string());
    }
    if (heads == 0 || d % heads != 0 || batches == 0 || vq.rows() % batches != 0 ||
        vk.rows() % batches != 0) {
        throw DimensionError("attention: cannot split " + vq.shape_string() + " into " +
                             std::to_string(batches) + " batches of " + std::to_string(heads) +
                             " heads");
    }
    const std::size_t lq = vq.rows() / batches;
    const std::size_t lk = vk.rows() / batches;
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    auto probs = std::make_shared<Tensor>(std::vector<std::size_t>{batches * heads * lq, lk});
    Tensor y({batches * lq, d});
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t i = 0; i < lq; ++i) {
                auto qi = vq.row(b * lq + i);
                auto pr = probs->row((b * heads + h) * lq + i);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < lk; ++j) {
                    auto kj = vk.row(b * lk + j);
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += qi[off + c] * kj[off + c];
                    pr[j] = s * scale;
                    mx = std::max(mx, pr[j]);
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < lk; ++j) {
                    pr[j] = std::exp(pr[j] - mx);
                    sum += pr[j];
                }
                auto yi = y.row(b * lq + i);
                for (std::size_t j = 0; j < lk; ++j) {
                    pr[j] /= sum;
                    auto vj = vv.row(b * lk + j);
                    for (std::size_t c = 0; c < dh; ++c) yi[off + c] += pr[j] * vj[off + c];
                }
            }
        }
    }
    if (weights) *weights = *probs;
    const bool rg = needs(q) || needs(k) || needs(v);
    return push(std::move(y), rg,
                [q, k, v, batches, heads, lq, lk, dh, scale, probs](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        const Tensor& vq = t.value(q);
        const Tensor& vk = t.value(k);
        const Tensor& vv = t.value(v);
        const std::size_t d = vq.cols();
        Tensor gq = Tensor::zeros_like(vq);
        Tensor gk = Tensor::zeros_like(vk);
        Tensor gv = Tensor::zeros_like(vv);
        std::vector<double> dp(lk);
        for (std::size_t b = 0; b < batches; ++b) {
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t off = h * dh;
                for (std::size_t i = 0; i < lq; ++i) {
                    auto pr = probs->row((b * heads + h) * lq + i);
                    auto dyi = dy.row(b * lq + i);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < lk; ++j) {
                        auto vj = vv.row(b * lk + j);
                        auto gvj = gv.row(b * lk + j);
                        double s = 0.0;
                        for (std::size_t c = 0; c < dh; ++c) {
                            s += dyi[off + c] * vj[off + c];
                            gvj[off + c] += pr[j] * dyi[off + c];
                        }
                        dp[j] = s;
                        dot += s * pr[j];
                    }
                    auto qi = vq.row(b * lq + i);
                    auto gqi = gq.row(b * lq + i);
                    for (std::size_t j = 0; j < lk; ++j) {
                        const double ds = pr[j] * (dp[j] - dot) * scale;
                        auto kj = vk.row(b * lk + j);
                        auto gkj = gk.row(b * lk + j);
                        for (std::size_t c = 0; c < dh; ++c) {
                            gqi[off + c] += ds * kj[off + c];
                            gkj[off + c] += ds * qi[off + c];
                        }
                    }
                }
            }
        }
        (void)d;
        if (t.needs(q)) accumulate_broadcast(t.grad(q.id), gq);
        if (t.needs(k)) accumulate_broadcast(t.grad(k.id), gk);
        if (t.needs(v)) accumulate_broadcast(t.grad(v.id), gv);
    });
}

Var Tape::cross_entropy(Var probs, std::vector<int> labels, double floor) {
    const Tensor& p = value(probs);
    if (labels.size() != p.rows()) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                             p.shape_string());
    }
    const int classes = static_cast<int>(p.cols());
    double loss = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= classes) {
            throw LabelError("cross_entropy: label " + std::to_string(labels[r]) +
                             " outside [0, " + std::to_string(classes - 1) + "]");
        }
        loss -= std::log(std::max(p.at(r, static_cast<std::size_t>(labels[r])), floor));
    }
    const double n = static_cast<double>(labels.size());
    Tensor y = Tensor::vector({loss / n});
    return push(std::move(y), needs(probs),
                [probs, labels = std::move(labels), floor, n](Tape& t, std::size_t self) {
        const double g = t.nodes_[self].grad[0];
        const Tensor& p = t.value(probs);
        Tensor& gp = t.grad(probs.id);
        for (std::size_t r = 0; r < labels.size(); ++r) {
            const auto c = static_cast<std::size_t>(labels[r]);
            const double pv = p.at(r, c);
            if (pv > floor) gp.at(r, c) -= g / (n * pv);
        }
    });
}

Var Tape::pair_squared_distance(Var x, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    const Tensor& vx = value(x);
    if (pairs.empty()) return constant(Tensor::vector({0.0}));
    double total = 0.0;
    for (auto [i, j] : pairs) {
        if (i >= vx.rows() || j >= vx.rows()) {
            throw IndexError("pair_squared_distance: pair out of range for " + vx.shape_string());
        }
        auto a = vx.row(i);
        auto b = vx.row(j);
        for (std::size_t c = 0; c < a.size(); ++c) total += (a[c] - b[c]) * (a[c] - b[c]);
    }
    const double n = static_cast<double>(pairs.size());
    Tensor y = Tensor::vector({total / n});
    return push(std::move(y), needs(x), [x, pairs = std::move(pairs), n](Tape& t, std::size_t self) {
        const double g = t.nodes_[self].grad[0];
        const Tensor& vx = t.value(x);
        Tensor& gx = t.grad(x.id);
        for (auto [i, j] : pairs) {
            auto a = vx.row(i);
            auto b = vx.row(j);
            auto ga = gx.row(i);
            auto gb = gx.row(j);
            for (std::size_t c = 0; c < a.size(); ++c) {
                const double d = 2.0 * g * (a[c] - b[c]) / n;
                ga[c] += d;
                gb[c] -= d;
            }
        }
    });
}

Var Tape::sum(Var x) {
    double s = 0.0;
    for (double v : value(x).data()) s += v;
    return push(Tensor::vector({s}), needs(x), [x](Tape& t, std::size_t self) {
        const double g = t.nodes_[self].grad[0];
        for (double& v : t.grad(x.id).data()) v += g;
    });
}

Var Tape::scale(Var x, double factor) {
    Tensor y = value(x);
    for (double& v : y.data()) v *= factor;
    return push(std::move(y), needs(x), [x, factor](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        Tensor& g = t.grad(x.id);
        for (std::size_t i = 0; i < dy.size(); ++i) g[i] += factor * dy[i];
    });
}

Var Tape::linear_combination(Var a, double wa, Var b, double wb) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.shape() != vb.shape()) {
        throw DimensionError("linear_combination: " + va.shape_string() + " vs " +
                             vb.shape_string());
    }
    Tensor y = va;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = wa * va[i] + wb * vb[i];
    return push(std::move(y), needs(a) || needs(b), [a, wa, b, wb](Tape& t, std::size_t self) {
        const Tensor& dy = t.nodes_[self].grad;
        if (t.needs(a)) {
            Tensor& g = t.grad(a.id);
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] += wa * dy[i];
        }
        if (t.needs(b)) {
            Tensor& g = t.grad(b.id);
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] += wb * dy[i];
        }
    });
}

Gradients Tape::backward(Var root) {
    if (root.id >= nodes_.size()) throw UsageError("backward: unknown root");
    if (nodes_[root.id].value.size() != 1) {
        throw UsageError("backward: root must be a scalar, got " +
                         nodes_[root.id].value.shape_string());
    }
    grad(root.id)[0] = 1.0;
    for (std::size_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.adjoint || n.grad.size() == 0) continue;
        n.adjoint(*this, id);
    }
    Gradients out;
    for (auto& n : nodes_) {
        if (n.param && n.grad.size() == n.value.size()) out.accumulate(*n.param, n.grad);
    }
    return out;
}

} // namespace pvvtt
