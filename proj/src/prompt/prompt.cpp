#include "pvvtt/prompt/prompt.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "pvvtt/errors.hpp"

namespace pvvtt {

std::size_t HeuristicTokenizer::count(std::string_view text) const {
    std::size_t points = 0;
    for (unsigned char c : text) points += (c & 0xC0) != 0x80;
    return (points + 3) / 4;
}

std::size_t select_key_frame(const Tensor& probs, std::size_t cls) {
    if (probs.rank() != 2 || probs.rows() == 0) throw ValidationError("select_key_frame: no frames");
    if (cls >= probs.cols()) {
        throw LabelError("select_key_frame: class " + std::to_string(cls) + " outside [0, " +
                         std::to_string(probs.cols()) + ")");
    }
    std::size_t best = 0;
    for (std::size_t t = 1; t < probs.rows(); ++t) {
        if (probs.at(t, cls) > probs.at(best, cls)) best = t;
    }
    return best;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

FrameRef make_frame_ref(const std::filesystem::path& frames_dir, const std::string& video_id,
                        std::size_t index) {
    FrameRef ref;
    ref.index = index;
    if (!frames_dir.empty()) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "%06zu", index);
        const std::pair<const char*, const char*> kinds[] = {
            {".jpg", "image/jpeg"}, {".jpeg", "image/jpeg"}, {".png", "image/png"}};
        for (const auto& [ext, mime] : kinds) {
            const auto path = frames_dir / video_id / (std::string(stem) + ext);
            if (!std::filesystem::exists(path)) continue;
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IoError("cannot read " + path.string(), 0, false);
            const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            ref.uri = std::string("data:") + mime + ";base64," + base64_encode(bytes);
            return ref;
        }
    }
    ref.uri = "frame://" + video_id + "#" + std::to_string(index);
    return ref;
}

std::string prompt_text(const std::string& class_name, const std::vector<std::string>& path_lines) {
    std::string text = "The following video frame was classified as '" + class_name + "'.";
    if (!path_lines.empty()) {
        text += " The classifier's strongest reasoning paths were: ";
        for (std::size_t i = 0; i < path_lines.size(); ++i) {
            if (i) text += "; ";
            text += path_lines[i];
        }
        text += ".";
    }
    text += " Describe what happens in the video, referencing this evidence.";
    return text;
}

std::string baseline_prompt_text(const std::string& class_name) {
    return "The following video was classified as '" + class_name +
           "'. Describe what happens in the video.";
}

PromptBundle build_prompt(const std::string& class_name, const std::vector<std::string>& path_lines,
                          const FrameRef& frame, const CostModel& cost) {
    if (frame.uri.empty()) throw ConfigError("build_prompt: missing frame reference");
    PromptBundle b;
    b.class_name = class_name;
    b.path_lines = path_lines;
    b.frame = frame;
    b.text = prompt_text(class_name, path_lines);
    b.tokens.text_tokens = cost.text_tokens(b.text);
    b.tokens.image_tokens = cost.tokens_per_image;
    return b;
}

ChatRequest describe_request(const PromptBundle& bundle, const std::string& model) {
    ChatRequest req;
    req.model = model;
    ChatMessage msg;
    msg.role = "user";
    msg.content.push_back({ContentPart::Kind::text, bundle.text});
    msg.content.push_back({ContentPart::Kind::image_url, bundle.frame.uri});
    req.messages.push_back(std::move(msg));
    return req;
}

std::string describe(const PromptBundle& bundle, ChatClient& client, const std::string& model) {
    return client.complete(describe_request(bundle, model));
}

CostReport cost_report(const std::vector<PromptBundle>& bundles, const std::vector<std::string>& video_ids,
                       std::size_t frames_per_video, const CostModel& cost) {
    if (bundles.empty()) throw ValidationError("cost_report: no prompt bundles");
    if (video_ids.size() != bundles.size()) {
        throw ValidationError("cost_report: " + std::to_string(video_ids.size()) + " ids for " +
                              std::to_string(bundles.size()) + " bundles");
    }
    CostReport r;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        CostRow row;
        row.video_id = video_ids[i];
        row.ours_tokens = bundles[i].tokens.total();
        row.baseline_tokens = frames_per_video * cost.tokens_per_image +
                              cost.text_tokens(baseline_prompt_text(bundles[i].class_name));
        row.ratio = static_cast<double>(row.baseline_tokens) / static_cast<double>(row.ours_tokens);
        r.mean_ours += static_cast<double>(row.ours_tokens);
        r.mean_baseline += static_cast<double>(row.baseline_tokens);
        r.mean_ratio += row.ratio;
        r.rows.push_back(std::move(row));
    }
    const double n = static_cast<double>(bundles.size());
    r.mean_ours /= n;
    r.mean_baseline /= n;
    r.mean_ratio /= n;
    return r;
}

std::string to_csv(const CostReport& report) {
    std::string out = "video_id,ours_tokens,baseline_tokens,ratio\n";
    for (const auto& row : report.rows) {
        char ratio[32];
        std::snprintf(ratio, sizeof ratio, "%.6f", row.ratio);
        out += row.video_id + "," + std::to_string(row.ours_tokens) + "," +
               std::to_string(row.baseline_tokens) + "," + ratio + "\n";
    }
    return out;
}

nlohmann::ordered_json to_json(const CostReport& report) {
    nlohmann::ordered_json j;
    j["mean_ours"] = report.mean_ours;
    j["mean_baseline"] = report.mean_baseline;
    j["mean_ratio"] = report.mean_ratio;
    j["config_hash"] = report.config_hash;
    return j;
}

} // namespace pvvtt
