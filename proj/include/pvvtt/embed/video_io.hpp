#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pvvtt/core/tensor.hpp"

namespace pvvtt {

// Frame embeddings of one video plus per-frame labels. Label M (the last
// class name) is Normal.
struct FrameEmbeddingSequence {
    std::string video_id;
    Tensor frames;  // [frame_count x dim]
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::optional<double> fps;

    std::size_t frame_count() const noexcept { return frames.rows(); }
    std::size_t dim() const noexcept { return frames.cols(); }
    int normal_class() const noexcept { return static_cast<int>(class_names.size()) - 1; }
    // The anomaly class present in the labels, or Normal when none is.
    int video_label() const;

    friend bool operator==(const FrameEmbeddingSequence&, const FrameEmbeddingSequence&) = default;
};

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

// "PVTT", u32 version, u32 frame_count, u32 dim, then f32 values, all
// little-endian. Values are rounded to single precision.
std::vector<std::uint8_t> encode_embeddings(const Tensor& frames);
Tensor decode_embeddings(const std::vector<std::uint8_t>& bytes, const std::string& location);

// Reads <path> and its sidecar <stem>.labels.json. With stride > 1 only
// every stride-th frame (and label) is kept.
FrameEmbeddingSequence load_video(const std::filesystem::path& path, std::size_t stride = 1);
void save_video(const std::filesystem::path& path, const FrameEmbeddingSequence& seq);
std::filesystem::path labels_path(const std::filesystem::path& embedding_path);

// Throws ValidationError for label/frame count mismatches, out of range
// labels or non-finite values.
void validate(const FrameEmbeddingSequence& seq);

struct DatasetManifest {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> class_names;
};

// Paths inside the manifest are relative to its directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<FrameEmbeddingSequence> videos;

    std::size_t dim() const { return videos.empty() ? 0 : videos.front().dim(); }
    std::size_t anomaly_classes() const { return class_names.size() - 1; }
};

// Loads one split ("train" or "test"), checking a consistent dim and class list.
Dataset load_split(const std::filesystem::path& manifest_path, const std::string& split,
                   std::size_t stride = 1);

} // namespace pvvtt
