#pragma once

#include <cstddef>
#include <vector>

#include "pvvtt/core/tape.hpp"

namespace pvvtt {

struct AdamWConfig {
    double lr = 1e-5;
    double weight_decay = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with decoupled weight decay: p <- p - lr*wd*p, then the bias-corrected
// moment step. Moments are kept per parameter in registration order.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

    // `grads[i]` belongs to `params[i]`.
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
    void step(const std::vector<Tensor*>& params, const Gradients& grads);

    const AdamWConfig& config() const noexcept { return cfg_; }
    std::size_t steps() const noexcept { return t_; }
    std::vector<Tensor>& first_moments() noexcept { return m_; }
    std::vector<Tensor>& second_moments() noexcept { return v_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }

    void restore(std::size_t t, std::vector<Tensor> m, std::vector<Tensor> v);

private:
    AdamWConfig cfg_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

} // namespace pvvtt
