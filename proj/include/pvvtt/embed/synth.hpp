#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvvtt/embed/video_io.hpp"

namespace pvvtt {

inline const std::vector<std::string> kDefaultMissionNames = {
    "Peeping Tom", "Trespassing", "Pervert", "Drone Trespassing", "Unauthorized Photographing"};

struct SynthOptions {
    std::uint64_t seed = 0;
    // Anomaly class names; "Normal" is appended as the last class.
    std::vector<std::string> mission_names = kDefaultMissionNames;
    std::size_t videos_per_class = 20;
    std::size_t min_frames = 100;
    std::size_t max_frames = 300;
    double separability = 0.9;
    std::size_t dim = 1024;
    double test_fraction = 0.2;
    double fps = 30.0;

    std::size_t M() const noexcept { return mission_names.size(); }
    std::vector<std::string> class_names() const;
    void validate() const;
};

struct SynthDataset {
    std::vector<std::string> class_names;
    std::vector<FrameEmbeddingSequence> train;
    std::vector<FrameEmbeddingSequence> test;
};

// Unit anchor direction of every class (row c, Normal last).
Tensor synth_anchors(const SynthOptions& opts);

// Every anomaly class and Normal get videos_per_class videos. An anomaly
// video holds one contiguous span of 30-70% of its frames drawn around its
// class anchor; the remaining frames (and all frames of Normal videos) are
// drawn around the Normal anchor. Noise per component is N(0, 1/dim) scaled
// by (1 - separability). Frames are then multiplied by sqrt(dim), so each
// component has roughly unit variance. Values are rounded to single precision.
SynthDataset synth_dataset(const SynthOptions& opts);

// Writes <dir>/videos/<id>.pvtt plus sidecars and <dir>/manifest.json.
// Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const SynthDataset& ds);

} // namespace pvvtt
