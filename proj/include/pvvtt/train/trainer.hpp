#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pvvtt/embed/video_io.hpp"
#include "pvvtt/train/adamw.hpp"
#include "pvvtt/train/losses.hpp"
#include "pvvtt/train/model.hpp"

namespace pvvtt {

enum class SupervisionMode { frame, video };

std::string to_string(SupervisionMode mode);
SupervisionMode supervision_mode_from_string(const std::string& text);

struct TrainConfig {
    double lr = 1e-5;
    double weight_decay = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t steps = 3000;
    std::size_t batch = 128;
    double alpha_d = 0.9999;
    double lambda_smooth = 0.1;
    SupervisionMode mode = SupervisionMode::frame;
    // Contiguous frames per sampled run in video mode.
    std::size_t run_length = 8;
    std::uint64_t seed = 0;

    AdamWConfig optimizer() const { return {lr, weight_decay, beta1, beta2, epsilon}; }
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct StepLog {
    std::size_t step = 0;
    double loss = 0.0;
    double ce = 0.0;
    double smooth = 0.0;
    double theta = 0.0;
};

// One JSON object per line: {step, loss, ce, smooth, theta}.
std::string to_json_line(const StepLog& log);

// A sampled mini-batch: sample i is frame `frames[i]` of video `videos[i]`.
struct Batch {
    std::vector<std::size_t> videos;
    std::vector<std::size_t> frames;
    // Sample index pairs (i, j) of the same video with frames[j] == frames[i] + 1.
    std::vector<std::pair<std::size_t, std::size_t>> adjacent;
};

// Deterministic in (seed, step).
Batch sample_batch(const Dataset& data, const TrainConfig& cfg, std::size_t step);

struct LossTerms {
    Var probs;  // [batch x classes]
    Var ce;
    Var smooth;
    Var loss;  // ce + lambda_smooth * smooth
};

// Training objective of one batch. Frame mode uses the true frame labels;
// video mode uses decaying-threshold pseudo-labels at `theta`.
LossTerms batch_loss(Tape& tape, const VarModel& model, const Dataset& data, const Batch& b,
                     const TrainConfig& cfg, double theta);

class Trainer {
public:
    Trainer(const Dataset& data, VarModel model, TrainConfig cfg);

    // Runs one optimizer step. NonFiniteLossError when the loss is not finite.
    StepLog step();
    // Runs until `cfg.steps` steps are done, writing one log line per step.
    void run(std::ostream* log = nullptr);

    const VarModel& model() const noexcept { return model_; }
    VarModel& model() noexcept { return model_; }
    const AdamW& optimizer() const noexcept { return opt_; }
    AdamW& optimizer() noexcept { return opt_; }
    const TrainConfig& config() const noexcept { return cfg_; }
    std::size_t steps_done() const noexcept { return opt_.steps(); }
    double theta() const noexcept { return threshold_.theta(); }

    // Resumes from saved optimizer state.
    void restore(std::size_t step, double theta, std::vector<Tensor> m, std::vector<Tensor> v);

private:
    const Dataset& data_;
    VarModel model_;
    TrainConfig cfg_;
    AdamW opt_;
    DecayingThreshold threshold_;
};

} // namespace pvvtt
