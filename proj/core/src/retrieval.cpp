#include "gw/retrieval.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace gw {

namespace {

struct Candidate {
    ProbeKind kind;
    std::string label;
    std::string text;
    double weight;
};

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.fragment.fragment_id < b.fragment.fragment_id;
}

} // namespace

void RetrievalConfig::validate() const {
    if (k < 1 || k > 10000) invalid("k must be in [1, 10000]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) invalid("alpha must be in [0, 1]");
    if (!(score_floor >= -1.0 && score_floor <= 1.0)) invalid("score_floor must be in [-1, 1]");
    if (!(session_decay > 0.0 && session_decay <= 1.0)) invalid("session decay must be in (0, 1]");
    if (max_probes < 1 || max_probes > 64) invalid("max_probes must be in [1, 64]");
    if (expansion_depth < 0 || expansion_depth > 2) invalid("expansion depth must be 0, 1 or 2");
    if (!(hop_decay > 0.0 && hop_decay <= 1.0)) invalid("hop decay must be in (0, 1]");
}

std::string_view to_string(ProbeKind kind) {
    switch (kind) {
    case ProbeKind::Query: return "query";
    case ProbeKind::Expansion: return "expansion";
    case ProbeKind::PriorTurn: return "prior_turn";
    }
    return "query";
}

std::vector<Probe> build_probes(std::string_view query, const SessionContext* session, TermExtractor& extractor,
                                const KgClient* kg, EmbeddingProvider& embedder, const RetrievalConfig& config) {
    const std::string q = text::trim(query);
    auto query_terms = extract_query_terms(q, extractor, config.extract);
    if (text::words(q).empty()) throw Error(ErrorCode::EmptyQuery, "query has no words");

    std::vector<Candidate> extra;
    if (kg != nullptr && !query_terms.empty()) {
        std::vector<EnrichedTerm> enriched;
        enriched.reserve(query_terms.size());
        LinkOptions link{config.languages};
        for (const auto& t : query_terms) enriched.push_back(link_term(t, *kg, link));
        ExpandOptions expand{config.languages, config.expansion_depth, config.hop_decay, config.max_related_labels};
        for (const auto& e : expand_terms(enriched, *kg, expand)) {
            for (const auto& l : e.expansion_labels) {
                extra.push_back({ProbeKind::Expansion, "kg[" + l.language + "]: " + l.label, l.label, l.weight});
            }
        }
    }
    if (session != nullptr) {
        const auto& prior = session->prior_queries;
        const std::size_t turns = std::min(prior.size(), config.max_session_turns);
        for (std::size_t age = 1; age <= turns; ++age) {
            const std::string& previous = prior[prior.size() - age];
            std::vector<Term> terms;
            try {
                terms = extract_query_terms(previous, extractor, config.extract);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyQuery) throw;
            }
            const double decay = std::pow(config.session_decay, static_cast<double>(age));
            for (const auto& t : terms) {
                extra.push_back({ProbeKind::PriorTurn, "turn-" + std::to_string(age) + ": " + t.surface, t.surface,
                                 t.weight * decay});
            }
        }
    }

    // Merge by folded text; the query probe always survives at weight 1.
    std::unordered_map<std::string, std::size_t> by_text;
    by_text.emplace(text::fold(q), SIZE_MAX);
    std::vector<Candidate> merged;
    for (auto& c : extra) {
        if (!(c.weight > 0.0) || text::words(c.text).empty()) continue;
        c.weight = std::min(c.weight, 1.0);
        auto key = text::fold(c.text);
        auto [it, inserted] = by_text.try_emplace(key, merged.size());
        if (inserted) {
            merged.push_back(std::move(c));
        } else if (it->second != SIZE_MAX && c.weight > merged[it->second].weight) {
            merged[it->second] = std::move(c);
        }
    }
    std::sort(merged.begin(), merged.end(), [](const Candidate& a, const Candidate& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.label < b.label;
    });
    if (merged.size() > config.max_probes - 1) merged.resize(config.max_probes - 1);

    std::vector<std::string> texts{q};
    for (const auto& c : merged) texts.push_back(c.text);
    auto vectors = embed_texts(texts, embedder);

    std::vector<Probe> probes;
    probes.push_back({ProbeKind::Query, "query", q, 1.0, std::move(vectors[0])});
    for (std::size_t i = 0; i < merged.size(); ++i) {
        probes.push_back({merged[i].kind, merged[i].label, merged[i].text, merged[i].weight, std::move(vectors[i + 1])});
    }
    return probes;
}

double aggregate_doc_score(std::span<const double> scores, double alpha) {
    if (scores.empty()) invalid("aggregate_doc_score: no scores");
    double max = scores[0];
    double sum = 0.0;
    for (double s : scores) {
        max = std::max(max, s);
        sum += s;
    }
    return alpha * max + (1.0 - alpha) * (sum / static_cast<double>(scores.size()));
}

double confidence_of(double cluster_doc_score, std::span<const double>) {
    return std::clamp(cluster_doc_score, 0.0, 1.0);
}

RankedRetrieval cluster_and_rank(std::vector<RetrievalHit> hits, const std::map<std::string, DocumentMeta>& metas,
                                 const RetrievalConfig& config) {
    std::map<std::string, std::vector<RetrievalHit>> groups;
    for (auto& h : hits) {
        if (!std::isfinite(h.score)) invalid("non-finite hit score for " + h.fragment.fragment_id);
        if (!metas.count(h.fragment.doc_id)) {
            throw Error(ErrorCode::UnknownDocId, "hit " + h.fragment.fragment_id + " references unknown document '" +
                                                     h.fragment.doc_id + "'");
        }
        groups[h.fragment.doc_id].push_back(std::move(h));
    }

    RankedRetrieval out;
    for (auto& [doc_id, group] : groups) {
        std::sort(group.begin(), group.end(), hit_before);
        std::vector<double> scores;
        scores.reserve(group.size());
        for (const auto& h : group) scores.push_back(h.score);
        DocumentCluster c;
        c.doc_meta = metas.at(doc_id);
        c.doc_score = aggregate_doc_score(scores, config.alpha);
        c.hits = std::move(group);
        out.clusters.push_back(std::move(c));
    }
    std::sort(out.clusters.begin(), out.clusters.end(), [](const DocumentCluster& a, const DocumentCluster& b) {
        if (a.doc_score != b.doc_score) return a.doc_score > b.doc_score;
        return a.doc_meta.doc_id < b.doc_meta.doc_id;
    });
    std::vector<double> all;
    for (const auto& c : out.clusters) all.push_back(c.doc_score);
    for (auto& c : out.clusters) c.confidence = confidence_of(c.doc_score, all);
    return out;
}

RankedRetrieval retrieve(std::string_view query, const SessionContext* session, const RetrievalDeps& deps,
                         const RetrievalConfig& config) {
    config.validate();
    auto probes = build_probes(query, session, deps.extractor, deps.kg, deps.embedder, config);

    std::vector<WeightedProbe> weighted;
    weighted.reserve(probes.size());
    for (const auto& p : probes) weighted.push_back({p.vector, p.weight});
    auto found = deps.index.multi_probe_search(weighted, config.k);

    std::unordered_map<std::string_view, const Fragment*> fragments;
    for (const auto& f : deps.collection.fragments) fragments.emplace(f.fragment_id, &f);

    std::vector<RetrievalHit> hits;
    for (const auto& h : found.hits) {
        // the floor applies to the cosine of the best probe, before its weight
        if (h.result.score / probes[h.best_probe].weight < config.score_floor) continue;
        auto it = fragments.find(h.result.fragment_id);
        if (it == fragments.end()) {
            throw Error(ErrorCode::UnknownDocId, "index entry " + h.result.fragment_id + " is not in the fragment store");
        }
        hits.push_back({*it->second, h.result.score, probes[h.best_probe].label});
    }

    RankedRetrieval ranked = cluster_and_rank(std::move(hits), deps.collection.metas(), config);
    ranked.query = text::trim(query);
    for (const auto& p : probes) ranked.probes_used.push_back({p.label, p.weight});
    return ranked;
}

nlohmann::json to_json(const RankedRetrieval& r) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : r.probes_used) probes.push_back({{"label", p.label}, {"weight", p.weight}});
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : r.clusters) {
        nlohmann::json hits = nlohmann::json::array();
        for (const auto& h : c.hits) {
            hits.push_back({{"fragment_id", h.fragment.fragment_id}, {"score", h.score}, {"probe", h.probe_label}});
        }
        clusters.push_back({{"doc_id", c.doc_meta.doc_id},
                            {"title", c.doc_meta.title},
                            {"doc_score", c.doc_score},
                            {"confidence", c.confidence},
                            {"hits", hits}});
    }
    return {{"query", r.query}, {"probes_used", probes}, {"clusters", clusters}};
}

} // namespace gw
