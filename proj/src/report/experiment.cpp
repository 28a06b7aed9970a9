#include "pvvtt/report/experiment.hpp"

#include <cstdio>
#include <vector>

#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;

std::vector<std::string> hashes(const ExperimentRecord& r) {
    std::vector<std::string> out;
    if (r.var) out.push_back(r.var->config_hash);
    if (r.captions) out.push_back(r.captions->config_hash);
    if (r.cost) out.push_back(r.cost->config_hash);
    return out;
}

template <class T>
std::optional<T> pick(const std::optional<T>& a, const std::optional<T>& b, const char* what) {
    if (a && b) {
        if (to_json(*a) != to_json(*b)) {
            throw ConsistencyError(std::string("merge: conflicting ") + what + " components");
        }
    }
    return a ? a : b;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::string ExperimentRecord::config_hash() const {
    const auto hs = hashes(*this);
    return hs.empty() ? std::string() : hs.front();
}

ExperimentRecord merge(const ExperimentRecord& a, const ExperimentRecord& b) {
    ExperimentRecord out;
    out.var = pick(a.var, b.var, "VAR");
    out.captions = pick(a.captions, b.captions, "caption");
    out.cost = pick(a.cost, b.cost, "cost");
    const auto hs = hashes(out);
    for (const auto& h : hs) {
        if (h != hs.front()) {
            throw ConsistencyError("merge: config hash " + h + " differs from " + hs.front());
        }
    }
    return out;
}

ExperimentRecord merge_reports(const std::optional<AucReport>& var,
                               const std::optional<CaptionScore>& captions,
                               const std::optional<CostReport>& cost) {
    if (!var && !captions && !cost) throw ValidationError("merge_reports: no components given");
    ExperimentRecord a;
    a.var = var;
    ExperimentRecord b;
    b.captions = captions;
    ExperimentRecord c;
    c.cost = cost;
    return merge(merge(a, b), c);
}

ojson to_json(const CaptionScore& score) {
    ojson j;
    j["bleu4"] = score.bleu4;
    j["rougeL"] = score.rougeL;
    j["pairs"] = score.pairs;
    j["config_hash"] = score.config_hash;
    return j;
}

CaptionScore caption_score_from_json(const ojson& j) {
    CaptionScore s;
    try {
        s.bleu4 = j.at("bleu4").get<double>();
        s.rougeL = j.at("rougeL").get<double>();
        s.pairs = j.value("pairs", std::size_t{0});
        s.config_hash = j.value("config_hash", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("<caption report>", e.what());
    }
    return s;
}

CostReport cost_summary_from_json(const ojson& j) {
    CostReport r;
    try {
        r.mean_ours = j.at("mean_ours").get<double>();
        r.mean_baseline = j.at("mean_baseline").get<double>();
        r.mean_ratio = j.at("mean_ratio").get<double>();
        r.config_hash = j.value("config_hash", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("<cost report>", e.what());
    }
    return r;
}

ojson to_json(const ExperimentRecord& record) {
    ojson j;
    j["config_hash"] = record.config_hash();
    if (record.var) {
        ojson v = to_json(*record.var);
        v.erase("config_hash");
        j["var"] = std::move(v);
    } else {
        j["var"] = "skipped";
    }
    if (record.captions) {
        ojson c = to_json(*record.captions);
        c.erase("config_hash");
        j["captions"] = std::move(c);
    } else {
        j["captions"] = "skipped";
    }
    if (record.cost) {
        ojson c = to_json(*record.cost);
        c.erase("config_hash");
        j["cost"] = std::move(c);
    } else {
        j["cost"] = "skipped";
    }
    return j;
}

std::string to_csv(const ExperimentRecord& record) {
    std::vector<std::string> header;
    std::vector<std::string> row;
    if (record.var) {
        const auto& v = *record.var;
        const std::size_t C = v.class_names.size();
        auto cell = [&](std::size_t c) { return v.per_class[c] ? num(*v.per_class[c]) : std::string("absent"); };
        if (C > 0) {
            header.push_back(v.class_names[C - 1]);
            row.push_back(cell(C - 1));
        }
        for (std::size_t c = 0; c + 1 < C; ++c) {
            header.push_back(v.class_names[c]);
            row.push_back(cell(c));
        }
        header.push_back("mAUC");
        row.push_back(v.mauc ? num(*v.mauc) : "absent");
    } else {
        header.push_back("mAUC");
        row.push_back("skipped");
    }
    header.insert(header.end(), {"BLEU-4", "ROUGE-L"});
    if (record.captions) {
        row.push_back(num(record.captions->bleu4));
        row.push_back(num(record.captions->rougeL));
    } else {
        row.insert(row.end(), {"skipped", "skipped"});
    }
    header.insert(header.end(), {"tokens_ours", "tokens_baseline", "token_ratio"});
    if (record.cost) {
        row.push_back(num(record.cost->mean_ours));
        row.push_back(num(record.cost->mean_baseline));
        row.push_back(num(record.cost->mean_ratio));
    } else {
        row.insert(row.end(), {"skipped", "skipped", "skipped"});
    }
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += "\n";
    return out;
}

void write_experiment(const std::filesystem::path& dir, const ExperimentRecord& record) {
    write_text_file(dir / "experiment.json", to_json(record).dump(2) + "\n");
    write_text_file(dir / "experiment.csv", to_csv(record));
}

} // namespace pvvtt
