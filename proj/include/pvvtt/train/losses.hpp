#pragma once

#include <vector>

#include "pvvtt/core/tensor.hpp"
#include "pvvtt/temporal/temporal.hpp"

namespace pvvtt {

inline constexpr double kProbabilityFloor = 1e-12;

// -log(max(probs[label], 1e-12)). LabelError when label is out of range.
double cross_entropy(const ClassDistribution& dist, int label);

// Mean squared L2 distance between consecutive distributions; 0 for fewer
// than two.
double smoothing_loss(const std::vector<ClassDistribution>& dists);

// probs: [frames x classes] with Normal last. Frames whose largest
// anomaly-class probability reaches theta get `video_label`, the rest Normal.
std::vector<int> decayed_threshold_pseudolabels(const Tensor& probs, int video_label, double theta);

// theta starts at 1 and is multiplied by alpha_d after every optimizer step.
class DecayingThreshold {
public:
    explicit DecayingThreshold(double alpha_d, double theta = 1.0);
    double theta() const noexcept { return theta_; }
    double alpha() const noexcept { return alpha_; }
    void step() noexcept { theta_ *= alpha_; }

private:
    double alpha_;
    double theta_;
};

} // namespace pvvtt
