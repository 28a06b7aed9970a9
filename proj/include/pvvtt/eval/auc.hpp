#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvvtt/core/tensor.hpp"

namespace pvvtt {

// Mann-Whitney AUC with midranks for tied scores. UndefinedAucError unless
// both classes are present.
double auc(const std::vector<double>& scores, const std::vector<bool>& positives);

struct AucReport {
    std::vector<std::string> class_names;
    // One entry per class, Normal last; empty when the class has no
    // positives or no negatives in the test labels.
    std::vector<std::optional<double>> per_class;
    // Mean over the anomaly classes that have an AUC.
    std::optional<double> mauc;
    std::vector<std::string> warnings;
    std::string config_hash;
};

// probs: [frames x classes], labels: class per frame. One-vs-rest AUC per
// class using probs[:, class] as the score.
AucReport var_report(const Tensor& probs, const std::vector<int>& labels,
                     const std::vector<std::string>& class_names);

// {per_class_auc: {name: auc|null}, mauc, warnings, config_hash}
nlohmann::ordered_json to_json(const AucReport& report);
AucReport auc_report_from_json(const nlohmann::ordered_json& j);
// class,auc rows followed by a mAUC row.
std::string to_csv(const AucReport& report);

} // namespace pvvtt
