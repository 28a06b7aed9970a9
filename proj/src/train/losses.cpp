#include "pvvtt/train/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {

double cross_entropy(const ClassDistribution& dist, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= dist.probs.size()) {
        throw LabelError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                         std::to_string(dist.probs.size()) + ")");
    }
    return -std::log(std::max(dist.probs[static_cast<std::size_t>(label)], kProbabilityFloor));
}

double smoothing_loss(const std::vector<ClassDistribution>& dists) {
    if (dists.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < dists.size(); ++i) {
        const auto& a = dists[i - 1].probs;
        const auto& b = dists[i].probs;
        if (a.size() != b.size()) {
            throw DimensionError("smoothing_loss: " + a.shape_string() + " vs " + b.shape_string());
        }
        for (std::size_t k = 0; k < a.size(); ++k) total += (b[k] - a[k]) * (b[k] - a[k]);
    }
    return total / static_cast<double>(dists.size() - 1);
}

std::vector<int> decayed_threshold_pseudolabels(const Tensor& probs, int video_label, double theta) {
    const std::size_t classes = probs.cols();
    if (classes < 2) throw DimensionError("pseudolabels: need at least two classes");
    const int normal = static_cast<int>(classes) - 1;
    if (video_label < 0 || video_label > normal) {
        throw LabelError("pseudolabels: video label " + std::to_string(video_label) + " outside [0, " +
                         std::to_string(normal) + "]");
    }
    std::vector<int> labels(probs.rows(), normal);
    if (video_label == normal) return labels;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        auto row = probs.row(r);
        const double top = *std::max_element(row.begin(), row.end() - 1);
        if (top >= theta) labels[r] = video_label;
    }
    return labels;
}

DecayingThreshold::DecayingThreshold(double alpha_d, double theta) : alpha_(alpha_d), theta_(theta) {
    if (!(alpha_d > 0.0 && alpha_d <= 1.0)) throw ConfigError("alpha_d must lie in (0, 1]");
}

} // namespace pvvtt
