#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pvvtt/core/tensor.hpp"
#include "pvvtt/net/chat.hpp"

namespace pvvtt {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
};

// ceil(code points / 4), counting UTF-8 code points.
class HeuristicTokenizer : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override;
};

struct CostModel {
    std::shared_ptr<const Tokenizer> tokenizer = std::make_shared<HeuristicTokenizer>();
    std::size_t tokens_per_image = 765;
    double price_per_1k = 0.005;

    std::size_t text_tokens(std::string_view text) const { return tokenizer->count(text); }
    double price(std::size_t tokens) const { return static_cast<double>(tokens) * price_per_1k / 1000.0; }
};

// Argmax over frames of probs[t, cls]; the earliest frame wins ties.
std::size_t select_key_frame(const Tensor& probs, std::size_t cls);

struct FrameRef {
    std::size_t index = 0;
    // Data URI of the frame image, or an opaque reference when no image is
    // available.
    std::string uri;
};

// <frames_dir>/<video_id>/<index, 6 digits>.{jpg,jpeg,png} as a base64 data
// URI when such a file exists, otherwise "frame://<video_id>#<index>".
FrameRef make_frame_ref(const std::filesystem::path& frames_dir, const std::string& video_id,
                        std::size_t index);
std::string base64_encode(std::string_view bytes);

struct TokenAccount {
    std::size_t text_tokens = 0;
    std::size_t image_tokens = 0;
    std::size_t total() const noexcept { return text_tokens + image_tokens; }
};

struct PromptBundle {
    std::string class_name;
    std::string text;
    std::vector<std::string> path_lines;
    FrameRef frame;
    TokenAccount tokens;
};

// Fills the fixed template. Without path lines the evidence sentence is
// dropped. ConfigError when the frame reference is empty.
PromptBundle build_prompt(const std::string& class_name, const std::vector<std::string>& path_lines,
                          const FrameRef& frame, const CostModel& cost);

std::string prompt_text(const std::string& class_name, const std::vector<std::string>& path_lines);
// Text that accompanies the whole-video baseline.
std::string baseline_prompt_text(const std::string& class_name);

// One user message with a text part and one image part.
ChatRequest describe_request(const PromptBundle& bundle, const std::string& model);
std::string describe(const PromptBundle& bundle, ChatClient& client, const std::string& model = "gpt-4o");

struct CostRow {
    std::string video_id;
    std::size_t ours_tokens = 0;
    std::size_t baseline_tokens = 0;
    double ratio = 0.0;
};

struct CostReport {
    std::vector<CostRow> rows;
    double mean_ours = 0.0;
    double mean_baseline = 0.0;
    double mean_ratio = 0.0;
    std::string config_hash;
};

// Baseline per video: frames_per_video images plus the baseline text.
// ValidationError for no bundles or mismatched id count.
CostReport cost_report(const std::vector<PromptBundle>& bundles, const std::vector<std::string>& video_ids,
                       std::size_t frames_per_video, const CostModel& cost);

// video_id,ours_tokens,baseline_tokens,ratio
std::string to_csv(const CostReport& report);
// {mean_ours, mean_baseline, mean_ratio, config_hash}
nlohmann::ordered_json to_json(const CostReport& report);

} // namespace pvvtt
