#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pvvtt/train/model.hpp"
#include "pvvtt/train/trainer.hpp"

namespace pvvtt {

inline constexpr int kCheckpointVersion = 1;

nlohmann::ordered_json to_json(const ModelConfig& cfg);
nlohmann::ordered_json to_json(const TrainConfig& cfg);
// Missing keys keep their defaults; wrongly typed values are ConfigErrors.
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

// Parameters are stored under their model names, optimizer moments under
// "adam.m.<name>" and "adam.v.<name>".
struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    std::string kg_hash;
    std::size_t step = 0;
    double theta = 1.0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(const Trainer& trainer, const std::string& kg_hash);

// Writes the JSON manifest at `path` and the f64 blob next to it (same stem,
// ".bin").
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::filesystem::path checkpoint_blob_path(const std::filesystem::path& path);

// Rebuilds the model. ConsistencyError when the KGs hash differently from
// the ones the checkpoint was trained on.
VarModel restore_model(const Checkpoint& ckpt, const std::vector<MissionKG>& kgs,
                       const Encoder& encoder);

// Loads parameters and optimizer state into a trainer built over the same
// model layout.
void restore_trainer(Trainer& trainer, const Checkpoint& ckpt);

// Builds a fresh model (initialised from train.seed), trains it for
// train.steps steps and returns the final checkpoint.
Checkpoint train_loop(const Dataset& data, const std::vector<MissionKG>& kgs, const ModelConfig& model,
                      const TrainConfig& train, const Encoder& encoder, std::ostream* log = nullptr);

} // namespace pvvtt
