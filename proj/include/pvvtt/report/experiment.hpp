#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "pvvtt/eval/auc.hpp"
#include "pvvtt/eval/captions.hpp"
#include "pvvtt/prompt/prompt.hpp"

namespace pvvtt {

// Absent components are written as "skipped".
struct ExperimentRecord {
    std::optional<AucReport> var;
    std::optional<CaptionScore> captions;
    std::optional<CostReport> cost;

    // The shared config hash of the present components.
    std::string config_hash() const;
};

// Combines two partial records. Order-independent. ConsistencyError when
// config hashes disagree or both sides carry different values for the same
// component.
ExperimentRecord merge(const ExperimentRecord& a, const ExperimentRecord& b);

// ValidationError when all three are absent.
ExperimentRecord merge_reports(const std::optional<AucReport>& var,
                               const std::optional<CaptionScore>& captions,
                               const std::optional<CostReport>& cost);

nlohmann::ordered_json to_json(const ExperimentRecord& record);

// One row: Normal AUC, anomaly-class AUCs, mAUC, BLEU-4, ROUGE-L, mean
// tokens (ours), mean tokens (baseline), ratio.
std::string to_csv(const ExperimentRecord& record);

// experiment.json and experiment.csv in `dir`.
void write_experiment(const std::filesystem::path& dir, const ExperimentRecord& record);

nlohmann::ordered_json to_json(const CaptionScore& score);
CaptionScore caption_score_from_json(const nlohmann::ordered_json& j);
CostReport cost_summary_from_json(const nlohmann::ordered_json& j);

} // namespace pvvtt
