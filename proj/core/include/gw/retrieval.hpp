#pragma once

#include "gw/corpus.hpp"
#include "gw/embedding.hpp"
#include "gw/fragment_store.hpp"
#include "gw/kg.hpp"
#include "gw/terms.hpp"
#include "gw/vector_index.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace gw {

struct RetrievalConfig {
    std::size_t k = 20;          // fragments retrieved per query
    double alpha = 0.7;          // doc_score = alpha * max + (1 - alpha) * mean
    double score_floor = 0.05;   // hits whose best-probe cosine is below this are dropped
    double session_decay = 0.5;  // prior-turn probes weigh decay^age
    std::size_t max_session_turns = 3;
    std::size_t max_probes = 8;  // including the query probe
    int expansion_depth = 1;
    double hop_decay = 0.5;
    std::size_t max_related_labels = 8;
    std::vector<std::string> languages; // expansion languages; empty = all
    ExtractConfig extract;

    /// Throws InvalidArgument when a parameter is outside its documented range.
    void validate() const;
};

enum class ProbeKind { Query, Expansion, PriorTurn };

std::string_view to_string(ProbeKind kind);

struct Probe {
    ProbeKind kind = ProbeKind::Query;
    std::string label; // unique among the probes of one query
    std::string text;  // what was embedded
    double weight = 1.0;
    EmbeddingVector vector;
};

struct ProbeInfo {
    std::string label;
    double weight = 0.0;

    bool operator==(const ProbeInfo&) const = default;
};

/// Earlier queries of the conversation, oldest first.
struct SessionContext {
    std::vector<std::string> prior_queries;
};

struct RetrievalHit {
    Fragment fragment;
    double score = 0.0;
    std::string probe_label;
};

struct DocumentCluster {
    DocumentMeta doc_meta;
    std::vector<RetrievalHit> hits; // score desc, fragment_id asc
    double doc_score = 0.0;
    double confidence = 0.0;
};

struct RankedRetrieval {
    std::string query;
    std::vector<ProbeInfo> probes_used;
    std::vector<DocumentCluster> clusters; // doc_score desc, doc_id asc
};

/// Probe 0 is the full query at weight 1. Further probes come from the KG
/// expansion labels of the query terms (at their expansion weight) and, with a
/// session, from the terms of up to max_session_turns earlier queries at
/// term.weight * session_decay^age (age 1 = the previous turn). Probes with the
/// same folded text keep the larger weight; at most max_probes are returned,
/// extras ordered by (weight desc, label asc).
std::vector<Probe> build_probes(std::string_view query, const SessionContext* session, TermExtractor& extractor,
                                const KgClient* kg, EmbeddingProvider& embedder, const RetrievalConfig& config);

/// alpha * max(scores) + (1 - alpha) * mean(scores); scores must be non-empty.
double aggregate_doc_score(std::span<const double> scores, double alpha);

/// clamp(doc_score, 0, 1). The other scores of the query are accepted so the
/// formula can later be replaced by a normalized variant without changing
/// callers.
double confidence_of(double cluster_doc_score, std::span<const double> all_doc_scores);

/// Groups hits by source document, scores each document, ranks documents and
/// attaches confidences. Throws UnknownDocId for a hit whose document is not
/// in `metas`.
RankedRetrieval cluster_and_rank(std::vector<RetrievalHit> hits, const std::map<std::string, DocumentMeta>& metas,
                                 const RetrievalConfig& config);

/// Everything the query path reads. The KG client is optional.
struct RetrievalDeps {
    const StoredCollection& collection;
    const FlatIndex& index;
    TermExtractor& extractor;
    const KgClient* kg = nullptr;
    EmbeddingProvider& embedder;
};

/// build_probes -> multi_probe_search -> score floor -> cluster_and_rank.
RankedRetrieval retrieve(std::string_view query, const SessionContext* session, const RetrievalDeps& deps,
                         const RetrievalConfig& config);

nlohmann::json to_json(const RankedRetrieval& r);

} // namespace gw
