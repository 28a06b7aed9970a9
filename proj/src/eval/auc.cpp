#include "pvvtt/eval/auc.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "pvvtt/errors.hpp"

namespace pvvtt {

double auc(const std::vector<double>& scores, const std::vector<bool>& positives) {
    if (scores.size() != positives.size()) {
        throw DimensionError("auc: " + std::to_string(scores.size()) + " scores for " +
                             std::to_string(positives.size()) + " labels");
    }
    const std::size_t n = scores.size();
    const auto n_pos = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedAucError("auc: need at least one positive and one negative");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive ranks, doubled so midranks stay integral.
    std::size_t rank_sum2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::size_t midrank2 = i + 1 + j;  // 2 * average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (positives[order[k]]) rank_sum2 += midrank2;
        }
        i = j;
    }
    const double u = static_cast<double>(rank_sum2) / 2.0 -
                     static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AucReport var_report(const Tensor& probs, const std::vector<int>& labels,
                     const std::vector<std::string>& class_names) {
    if (probs.rank() != 2 || probs.rows() != labels.size()) {
        throw DimensionError("var_report: probs " + probs.shape_string() + " for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (probs.cols() != class_names.size()) {
        throw DimensionError("var_report: " + std::to_string(probs.cols()) + " columns for " +
                             std::to_string(class_names.size()) + " classes");
    }
    AucReport r;
    r.class_names = class_names;
    const std::size_t C = class_names.size();
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> scores(labels.size());
        std::vector<bool> pos(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probs.at(i, c);
            pos[i] = labels[i] == static_cast<int>(c);
        }
        try {
            r.per_class.push_back(auc(scores, pos));
        } catch (const UndefinedAucError&) {
            r.per_class.push_back(std::nullopt);
            r.warnings.push_back("class '" + class_names[c] + "' absent from the test labels (or has no negatives); excluded");
            continue;
        }
        if (c + 1 < C) {
            sum += *r.per_class.back();
            ++counted;
        }
    }
    if (counted > 0) r.mauc = sum / static_cast<double>(counted);
    return r;
}

nlohmann::ordered_json to_json(const AucReport& report) {
    nlohmann::ordered_json j;
    j["per_class_auc"] = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        const auto& v = report.per_class[c];
        j["per_class_auc"][report.class_names[c]] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    }
    j["mauc"] = report.mauc ? nlohmann::ordered_json(*report.mauc) : nlohmann::ordered_json(nullptr);
    j["warnings"] = report.warnings;
    j["config_hash"] = report.config_hash;
    return j;
}

AucReport auc_report_from_json(const nlohmann::ordered_json& j) {
    AucReport r;
    try {
        for (const auto& [name, v] : j.at("per_class_auc").items()) {
            r.class_names.push_back(name);
            r.per_class.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
        if (!j.at("mauc").is_null()) r.mauc = j.at("mauc").get<double>();
        if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (j.contains("config_hash")) r.config_hash = j.at("config_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("<auc report>", e.what());
    }
    return r;
}

std::string to_csv(const AucReport& report) {
    std::string out = "class,auc\n";
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("absent");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", *v);
        return std::string(buf);
    };
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        out += report.class_names[c] + "," + fmt(report.per_class[c]) + "\n";
    }
    out += "mAUC," + fmt(report.mauc) + "\n";
    return out;
}

} // namespace pvvtt
