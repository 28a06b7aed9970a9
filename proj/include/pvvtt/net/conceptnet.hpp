#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pvvtt/kg/kg.hpp"
#include "pvvtt/net/http.hpp"

namespace pvvtt {

// Source of raw ConceptNet "RelatedTo" query bodies.
class RelatedTermSource {
public:
    virtual ~RelatedTermSource() = default;
    // JSON body of GET <base>/query?start=/c/en/<term>&rel=/r/RelatedTo&limit=<limit>.
    virtual std::string query(const std::string& term, std::size_t limit) = 0;
};

// Cache-first client. Responses live in <cache_dir>/conceptnet/<term>.json;
// an offline client with a cache miss raises NetworkDisabledError. A
// directory of fixtures is just a pre-populated cache.
class ConceptNetClient : public RelatedTermSource {
public:
    struct Options {
        std::string base_url = "https://api.conceptnet.io";
        std::filesystem::path cache_dir;
        bool offline = false;
        RetryPolicy retry{};
    };

    explicit ConceptNetClient(Options options);

    std::string query(const std::string& term, std::size_t limit) override;

    std::string query_url(const std::string& term, std::size_t limit) const;
    std::filesystem::path cache_path(const std::string& term) const;

private:
    Options options_;
    HttpTransport transport_;
};

// Lowercase ASCII, internal whitespace runs become '_', outer whitespace
// trimmed. This is the ConceptNet term form.
std::string normalize_term(const std::string& word);

// Related English terms from a query body, excluding the query term itself,
// each with the largest weight seen for it.
std::vector<RelatedWord> parse_related_edges(const std::string& body, const std::string& term);

} // namespace pvvtt
