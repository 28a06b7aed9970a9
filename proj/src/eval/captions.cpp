#include "pvvtt/eval/captions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {

std::vector<std::string> caption_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else if (!std::ispunct(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double bleu4(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    if (ref.empty()) throw ValidationError("bleu4: empty reference");
    if (hyp.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::map<std::vector<std::string>, std::size_t> ref_counts;
        for (std::size_t i = 0; i + n <= ref.size(); ++i) {
            ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
        }
        std::map<std::vector<std::string>, std::size_t> hyp_counts;
        std::size_t total = 0;
        for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
            ++hyp_counts[std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n)];
            ++total;
        }
        std::size_t matches = 0;
        for (const auto& [gram, count] : hyp_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matches += std::min(count, it->second);
        }
        const double p = matches > 0 ? static_cast<double>(matches) / static_cast<double>(total)
                                     : 1e-9 / static_cast<double>(std::max<std::size_t>(total, 1));
        log_sum += 0.25 * std::log(p);
    }
    const double c = static_cast<double>(hyp.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, double beta) {
    if (ref.empty()) throw ValidationError("rouge_l: empty reference");
    if (hyp.empty()) return 0.0;
    const auto lcs = static_cast<double>(lcs_length(hyp, ref));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(hyp.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

CaptionScore score_captions(const std::map<std::string, std::string>& hypotheses,
                            const std::map<std::string, std::string>& references) {
    CaptionScore s;
    for (const auto& [id, ref_text] : references) {
        auto it = hypotheses.find(id);
        if (it == hypotheses.end()) continue;
        const auto ref = caption_tokens(ref_text);
        if (ref.empty()) throw ValidationError("captions: empty reference for " + id);
        const auto hyp = caption_tokens(it->second);
        s.bleu4 += bleu4(hyp, ref);
        s.rougeL += rouge_l(hyp, ref);
        ++s.pairs;
    }
    if (s.pairs == 0) throw ValidationError("captions: no video id has both a hypothesis and a reference");
    s.bleu4 /= static_cast<double>(s.pairs);
    s.rougeL /= static_cast<double>(s.pairs);
    return s;
}

} // namespace pvvtt
