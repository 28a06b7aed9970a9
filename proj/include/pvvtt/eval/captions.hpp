#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pvvtt {

// Lowercases, removes ASCII punctuation and splits on whitespace.
std::vector<std::string> caption_tokens(std::string_view text);

// Geometric mean of clipped 1..4-gram precisions times the brevity penalty.
// An order without matches contributes 1e-9 / max(count, 1). Empty
// hypothesis scores 0.
double bleu4(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// LCS F-measure with beta = 1.2.
double rouge_l(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference,
               double beta = 1.2);

struct CaptionScore {
    double bleu4 = 0.0;
    double rougeL = 0.0;
    std::size_t pairs = 0;
    std::string config_hash;
};

// Mean scores over the ids present in both maps. ValidationError when a
// reference is empty or no id is shared.
CaptionScore score_captions(const std::map<std::string, std::string>& hypotheses,
                            const std::map<std::string, std::string>& references);

} // namespace pvvtt
