#include "pvvtt/train/adamw.hpp"

#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {

void AdamW::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size()) {
        throw DimensionError("adamw: " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(params.size()) + " parameters");
    }
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.push_back(Tensor::zeros_like(*p));
            v_.push_back(Tensor::zeros_like(*p));
        }
    }
    if (m_.size() != params.size()) throw DimensionError("adamw: parameter list changed");

    ++t_;
    const double t = static_cast<double>(t_);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t);
    const double decay = 1.0 - cfg_.lr * cfg_.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (g.size() != p.size()) {
            throw DimensionError("adamw: gradient " + g.shape_string() + " for parameter " +
                                 p.shape_string());
        }
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] *= decay;
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            p[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void AdamW::step(const std::vector<Tensor*>& params, const Gradients& grads) {
    std::vector<Tensor> g;
    g.reserve(params.size());
    for (const Tensor* p : params) g.push_back(grads.of(*p));
    step(params, g);
}

void AdamW::restore(std::size_t t, std::vector<Tensor> m, std::vector<Tensor> v) {
    if (m.size() != v.size()) throw DimensionError("adamw: moment lists differ in length");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

} // namespace pvvtt
