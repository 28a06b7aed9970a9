#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "pvvtt/embed/synth.hpp"
#include "pvvtt/kg/kg.hpp"
#include "pvvtt/prompt/prompt.hpp"
#include "pvvtt/train/model.hpp"
#include "pvvtt/train/trainer.hpp"

namespace pvvtt {

// Empty paths fall back to files inside output_dir (see RunConfig::*_path).
struct RunPaths {
    std::filesystem::path output_dir = "out";
    std::filesystem::path manifest;
    std::filesystem::path kg;
    std::filesystem::path checkpoint;
    std::filesystem::path fixtures;
    std::filesystem::path cache_dir;
    std::filesystem::path frames_dir;
};

struct ReasonSettings {
    std::size_t k = 3;
    bool average_frames = false;
};

struct CostSettings {
    std::size_t tokens_per_image = 765;
    double price_per_1k = 0.005;
    std::size_t baseline_frames = 12;

    CostModel model() const;
};

struct ClientSettings {
    std::string llm_endpoint;
    std::string llm_model = "gpt-4o";
    std::string conceptnet_url = "https://api.conceptnet.io";
};

// Everything a pipeline run depends on. `seed` drives the synthetic data,
// the pseudo encoder, initialisation and batch sampling.
struct RunConfig {
    std::uint64_t seed = 0;
    bool offline = false;
    std::size_t dim = 1024;
    std::size_t stride = 1;
    std::size_t baseline_hidden = 128;
    RunPaths paths;
    KgConfig kg;
    SynthOptions synth;
    ModelConfig model;
    TrainConfig train;
    ReasonSettings reason;
    CostSettings cost;
    ClientSettings clients;

    RunConfig();

    // Pushes seed and dim into the nested configs.
    void propagate();
    void validate() const;

    std::filesystem::path manifest_path() const;
    std::filesystem::path kg_path() const;
    std::filesystem::path checkpoint_path() const;
    std::filesystem::path out(const std::string& file) const { return paths.output_dir / file; }

    // Settings that affect results (no paths, endpoints or offline switch).
    nlohmann::ordered_json experiment_json() const;
    std::string hash() const;
};

// Reads the JSON config file; unknown top-level keys are ConfigErrors.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_json(RunConfig& cfg, const nlohmann::ordered_json& j);
// PVVTT_CONCEPTNET_URL, PVVTT_CACHE_DIR and PVVTT_LLM_ENDPOINT.
void apply_environment(RunConfig& cfg);

} // namespace pvvtt
