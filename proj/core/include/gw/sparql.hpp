#pragma once

#include "gw/kg.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace gw {

namespace skos {
inline constexpr const char* kPrefLabel = "http://www.w3.org/2004/02/skos/core#prefLabel";
inline constexpr const char* kAltLabel = "http://www.w3.org/2004/02/skos/core#altLabel";
inline constexpr const char* kRelated = "http://www.w3.org/2004/02/skos/core#related";
inline constexpr const char* kBroader = "http://www.w3.org/2004/02/skos/core#broader";
inline constexpr const char* kRdfsLabel = "http://www.w3.org/2000/01/rdf-schema#label";
} // namespace skos

struct SparqlConfig {
    std::string endpoint; // full URL, e.g. https://query.wikidata.org/sparql
    std::optional<std::string> auth_token;
    std::vector<std::string> pref_label_predicates{skos::kPrefLabel, skos::kRdfsLabel};
    std::vector<std::string> alt_label_predicates{skos::kAltLabel};
    std::vector<std::string> related_predicates{skos::kRelated};
    std::vector<std::string> broader_predicates{skos::kBroader};
    /// Extra relation predicates, e.g. Wikidata's P279 / P361 property IRIs.
    std::vector<std::string> custom_relation_predicates;
    std::optional<std::filesystem::path> cache_file;
    bool cache_only = false; // replay from cache; a miss is KgUnavailable
    std::size_t match_limit = 50;
    int max_retries = 2;
    std::chrono::milliseconds timeout{15000};
};

/// KgClient over a SPARQL 1.1 endpoint (SELECT, results in
/// application/sparql-results+json). Responses are cached in memory and, when
/// a cache file is configured, appended to it as JSON lines
/// {"request_hash", "response", "fetched_at"} keyed by sha256(endpoint "\n" query).
class SparqlKgClient final : public KgClient {
public:
    explicit SparqlKgClient(SparqlConfig config);

    std::string source_id() const override { return config_.endpoint; }
    std::vector<LabelMatch> match_labels(const std::string& folded_surface) const override;
    std::optional<KgConcept> concept_by_iri(const std::string& iri) const override;

    /// Runs (or replays) a SELECT query and returns the parsed JSON result.
    nlohmann::json select(const std::string& query) const;

    std::string label_query(const std::string& folded_surface) const;
    std::string concept_query(const std::string& iri) const;

    std::size_t cached_responses() const;

private:
    nlohmann::json fetch(const std::string& query) const;
    [[noreturn]] void unavailable(const std::string& what) const;

    SparqlConfig config_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, nlohmann::json> cache_;
};

/// Escapes a string for use inside a double-quoted SPARQL literal.
std::string sparql_escape(std::string_view s);

} // namespace gw
