#pragma once

#include "gw/corpus.hpp"
#include "gw/http_json.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace gw {

struct Term {
    std::string surface; // folded: lowercase NFC, single spaces
    double weight = 0.0;
    std::vector<std::string> source_fragments;

    bool operator==(const Term&) const = default;
};

/// Terms sorted by (weight desc, surface asc); surfaces unique.
struct TermTable {
    std::string collection_id;
    std::vector<Term> terms;
    std::string extractor_id;

    bool operator==(const TermTable&) const = default;
};

/// Version tag of the built-in English stopword list.
inline constexpr const char* kStopwordListVersion = "en-v1";

const std::unordered_set<std::string>& english_stopwords();

struct ExtractConfig {
    std::size_t max_terms_per_collection = 500;
    std::size_t max_terms_per_query = 8;
    std::size_t max_ngram = 3;
    /// Additional stopwords keyed by language tag; all lists are active.
    std::map<std::string, std::vector<std::string>> extra_stopwords;
};

/// Source of candidate surfaces. The engine re-validates and re-weights every
/// candidate, so an extractor only decides *which* phrases are considered.
class TermExtractor {
public:
    virtual ~TermExtractor() = default;

    virtual std::string id() const = 0;

    /// One candidate list per input fragment, aligned with the input.
    virtual std::vector<std::vector<std::string>> candidates(std::span<const Fragment> fragments,
                                                             const ExtractConfig& config) = 0;
};

/// Offline extractor: word n-grams (1..max_ngram) within punctuation-delimited
/// segments whose first and last tokens are neither stopwords, numbers, nor
/// single characters.
class StatisticalTermExtractor final : public TermExtractor {
public:
    std::string id() const override;
    std::vector<std::vector<std::string>> candidates(std::span<const Fragment> fragments,
                                                     const ExtractConfig& config) override;
};

/// Remote extractor speaking the term provider protocol:
///   POST <path> {"model_id": m, "fragments": [{"fragment_id", "text"}]}
///   -> {"results": [{"fragment_id", "terms": [surface, ...]}]}
class LlmTermExtractor final : public TermExtractor {
public:
    LlmTermExtractor(std::shared_ptr<JsonHttpClient> client, std::string model_id,
                     std::string path = "/v1/terms", std::size_t batch_size = 16);

    std::string id() const override;
    std::vector<std::vector<std::string>> candidates(std::span<const Fragment> fragments,
                                                     const ExtractConfig& config) override;

private:
    std::shared_ptr<JsonHttpClient> client_;
    std::string model_id_;
    std::string path_;
    std::size_t batch_size_;
};

/// Weights every validated candidate with
///   weight = tf * (ln((1 + N) / (1 + df)) + 1) * token_count
/// where tf counts occurrences over all fragments and N/df count *distinct*
/// fragment texts, so duplicated boilerplate never shifts the IDF of other terms.
/// Candidates that do not occur verbatim (token-wise) in their fragment, or
/// that exceed ten tokens, are dropped.
TermTable extract_terms(std::span<const Fragment> fragments, TermExtractor& extractor,
                        const ExtractConfig& config = {}, std::string collection_id = {});

/// Query-side extraction: the query is scored as a single pseudo-fragment
/// named "query"; the top max_terms_per_query weights are rescaled to sum to 1.
std::vector<Term> extract_query_terms(std::string_view query, TermExtractor& extractor,
                                      const ExtractConfig& config = {});

void write_term_table(const TermTable& table, std::ostream& out);
TermTable read_term_table(std::istream& in);

} // namespace gw
