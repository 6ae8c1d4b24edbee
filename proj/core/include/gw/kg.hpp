#pragma once

#include "gw/terms.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gw {

enum class RelationKind { Related, Broader, Custom };

std::string_view to_string(RelationKind kind);

struct ConceptRelation {
    std::string iri;
    RelationKind kind = RelationKind::Related;

    bool operator==(const ConceptRelation&) const = default;
};

struct KgConcept {
    std::string concept_iri;
    std::map<std::string, std::string> pref_labels;               // language -> label
    std::map<std::string, std::vector<std::string>> alt_labels;   // language -> labels
    std::vector<ConceptRelation> related;                         // no duplicates, never self
    std::string source_graph;

    bool operator==(const KgConcept&) const = default;
};

struct ExpansionLabel {
    std::string label;
    std::string language;
    double weight = 0.0; // (0, 1]

    bool operator==(const ExpansionLabel&) const = default;
};

struct EnrichedTerm {
    Term term;
    std::optional<KgConcept> linked_concept;
    std::vector<ExpansionLabel> expansion_labels;

    bool operator==(const EnrichedTerm&) const = default;
};

struct LabelMatch {
    std::string concept_iri;
    std::string label; // as stored in the graph
    bool exact = false; // folded label equals the folded surface
};

/// Read access to a knowledge graph. Implementations must be safe to share
/// across threads. Network failures throw Error(KgUnavailable); "no match" is
/// an empty result, never an exception.
class KgClient {
public:
    virtual ~KgClient() = default;

    virtual std::string source_id() const = 0;

    /// Concepts with a pref/alt label equal to, or containing, the surface
    /// (comparison on folded text).
    virtual std::vector<LabelMatch> match_labels(const std::string& folded_surface) const = 0;

    virtual std::optional<KgConcept> concept_by_iri(const std::string& iri) const = 0;
};

bool is_iri(std::string_view s);

/// Offline client over the SKOS-subset fixture format:
///   {"format": "gw-skos/1", "graph_id": "...",
///    "concepts": [{"iri", "prefLabel": {lang: str}, "altLabel": {lang: [str]},
///                  "related": [iri], "broader": [iri]}]}
class SkosFixtureClient final : public KgClient {
public:
    static std::shared_ptr<SkosFixtureClient> from_json(const nlohmann::json& j, std::string fallback_id = "fixture");

    std::string source_id() const override { return graph_id_; }
    std::vector<LabelMatch> match_labels(const std::string& folded_surface) const override;
    std::optional<KgConcept> concept_by_iri(const std::string& iri) const override;

    std::size_t concept_count() const { return concepts_.size(); }

private:
    std::string graph_id_;
    std::map<std::string, KgConcept> concepts_;
    // folded label -> (iri, original label), in (iri, label) order
    std::vector<std::pair<std::string, LabelMatch>> labels_;
};

/// Loads a SKOS fixture file; throws MalformedFixture on syntax errors,
/// invalid IRIs, missing prefLabels, self-relations or dangling references.
std::shared_ptr<SkosFixtureClient> load_skos_fixture(const std::filesystem::path& path);

struct LinkOptions {
    std::vector<std::string> languages; // empty = all languages
};

/// Links a term to the best matching concept: exact pref/alt label match
/// first, otherwise the shortest label containing the whole surface; ties go to
/// the lexicographically smallest IRI. The concept's own labels (minus the
/// surface itself) become expansion labels at min(term.weight, 1).
EnrichedTerm link_term(const Term& term, const KgClient& kg, const LinkOptions& options = {});

struct ExpandOptions {
    std::vector<std::string> languages; // empty = all languages
    int depth = 1;                      // 0, 1 or 2
    double hop_decay = 0.5;
    std::size_t max_related_labels = 8;
};

/// Adds labels of related/broader concepts reachable in up to `depth` hops at
/// weight base * hop_decay^hop, visiting concepts breadth-first in IRI order.
/// depth 0 returns the input unchanged. Otherwise every expansion label,
/// including those from linking, is restricted to `languages`.
std::vector<EnrichedTerm> expand_terms(const std::vector<EnrichedTerm>& terms, const KgClient& kg,
                                       const ExpandOptions& options = {});

nlohmann::json to_json(const KgConcept& c);
nlohmann::json to_json(const EnrichedTerm& t);

} // namespace gw
