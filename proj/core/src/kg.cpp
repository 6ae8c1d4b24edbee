#include "gw/kg.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <unordered_set>

namespace gw {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedFixture, what); }

bool language_allowed(const std::string& lang, const std::vector<std::string>& languages) {
    if (languages.empty()) return true;
    for (const auto& want : languages) {
        if (lang == want) return true;
        if (lang.size() > want.size() && lang.compare(0, want.size(), want) == 0 && lang[want.size()] == '-') {
            return true;
        }
    }
    return false;
}

// True when the token sequence of `surface` occurs contiguously in `label`.
bool contains_tokens(const std::string& label, const std::string& folded_surface) {
    const std::string hay = " " + text::fold(label) + " ";
    const std::string needle = " " + folded_surface + " ";
    if (hay.find(needle) != std::string::npos) return true;
    auto lw = text::words(label);
    auto sw = text::words(folded_surface);
    if (sw.empty() || sw.size() > lw.size()) return false;
    return std::search(lw.begin(), lw.end(), sw.begin(), sw.end()) != lw.end();
}

// Labels of a concept in deterministic order: pref labels by language, then
// alt labels by language and position.
std::vector<std::pair<std::string, std::string>> ordered_labels(const KgConcept& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [lang, label] : c.pref_labels) out.emplace_back(label, lang);
    for (const auto& [lang, labels] : c.alt_labels) {
        for (const auto& l : labels) out.emplace_back(l, lang);
    }
    return out;
}

class LabelSet {
public:
    explicit LabelSet(const std::string& surface) { seen_.insert(text::fold(surface)); }

    bool add(const std::string& label) { return seen_.insert(text::fold(label)).second; }

private:
    std::unordered_set<std::string> seen_;
};

std::vector<std::string> string_list(const json& j, const std::string& where) {
    std::vector<std::string> out;
    if (j.is_null()) return out;
    if (!j.is_array()) malformed(where + " must be an array");
    for (const auto& v : j) {
        if (!v.is_string()) malformed(where + " must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

std::string_view to_string(RelationKind kind) {
    switch (kind) {
    case RelationKind::Related: return "related";
    case RelationKind::Broader: return "broader";
    case RelationKind::Custom: return "custom";
    }
    return "related";
}

bool is_iri(std::string_view s) {
    static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>"{}|\\^`]+$)");
    return std::regex_match(s.begin(), s.end(), re);
}

std::shared_ptr<SkosFixtureClient> SkosFixtureClient::from_json(const json& j, std::string fallback_id) {
    if (!j.is_object()) malformed("fixture root must be an object");
    auto client = std::shared_ptr<SkosFixtureClient>(new SkosFixtureClient());
    client->graph_id_ = j.contains("graph_id") && j["graph_id"].is_string() ? j["graph_id"].get<std::string>()
                                                                            : std::move(fallback_id);
    if (j.contains("format") && j["format"] != "gw-skos/1") {
        malformed("unsupported fixture format " + j["format"].dump());
    }
    auto concepts = j.find("concepts");
    if (concepts == j.end() || !concepts->is_array()) malformed("missing 'concepts' array");

    for (const auto& cj : *concepts) {
        if (!cj.is_object() || !cj.contains("iri") || !cj["iri"].is_string()) malformed("concept without 'iri'");
        KgConcept c;
        c.concept_iri = cj["iri"].get<std::string>();
        c.source_graph = client->graph_id_;
        if (!is_iri(c.concept_iri)) malformed("invalid IRI '" + c.concept_iri + "'");
        if (client->concepts_.count(c.concept_iri)) malformed("duplicate concept '" + c.concept_iri + "'");

        if (auto p = cj.find("prefLabel"); p != cj.end()) {
            if (!p->is_object()) malformed(c.concept_iri + ": prefLabel must be an object");
            for (const auto& [lang, label] : p->items()) {
                if (!label.is_string() || label.get<std::string>().empty()) {
                    malformed(c.concept_iri + ": prefLabel@" + lang + " must be a non-empty string");
                }
                c.pref_labels[lang] = label.get<std::string>();
            }
        }
        if (c.pref_labels.empty()) malformed(c.concept_iri + ": no prefLabel");
        if (auto a = cj.find("altLabel"); a != cj.end()) {
            if (!a->is_object()) malformed(c.concept_iri + ": altLabel must be an object");
            for (const auto& [lang, labels] : a->items()) {
                c.alt_labels[lang] = string_list(labels, c.concept_iri + ": altLabel@" + lang);
            }
        }
        std::set<std::string> seen;
        auto add_relations = [&](const char* key, RelationKind kind) {
            if (!cj.contains(key)) return;
            for (auto& iri : string_list(cj[key], c.concept_iri + ": " + key)) {
                if (iri == c.concept_iri) malformed(c.concept_iri + ": relates to itself");
                if (seen.insert(iri).second) c.related.push_back({iri, kind});
            }
        };
        add_relations("related", RelationKind::Related);
        add_relations("broader", RelationKind::Broader);
        client->concepts_.emplace(c.concept_iri, std::move(c));
    }

    for (const auto& [iri, c] : client->concepts_) {
        for (const auto& r : c.related) {
            if (!client->concepts_.count(r.iri)) malformed("dangling reference to '" + r.iri + "' from '" + iri + "'");
        }
        for (const auto& [label, lang] : ordered_labels(c)) {
            client->labels_.emplace_back(text::fold(label), LabelMatch{iri, label, false});
        }
    }
    return client;
}

std::vector<LabelMatch> SkosFixtureClient::match_labels(const std::string& folded_surface) const {
    std::vector<LabelMatch> out;
    if (folded_surface.empty()) return out;
    for (const auto& [folded, match] : labels_) {
        if (folded == folded_surface) {
            out.push_back(match);
            out.back().exact = true;
        } else if (folded.find(folded_surface) != std::string::npos) {
            out.push_back(match);
        }
    }
    return out;
}

std::optional<KgConcept> SkosFixtureClient::concept_by_iri(const std::string& iri) const {
    auto it = concepts_.find(iri);
    if (it == concepts_.end()) return std::nullopt;
    return it->second;
}

std::shared_ptr<SkosFixtureClient> load_skos_fixture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) malformed("cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        malformed(path.string() + ": " + e.what());
    }
    return SkosFixtureClient::from_json(j, path.stem().string());
}

EnrichedTerm link_term(const Term& term, const KgClient& kg, const LinkOptions& options) {
    EnrichedTerm out;
    out.term = term;
    const std::string surface = text::fold(term.surface);
    if (surface.empty()) return out;

    const LabelMatch* best = nullptr;
    std::size_t best_len = 0;
    auto matches = kg.match_labels(surface);
    for (const auto& m : matches) {
        const bool exact = m.exact || text::fold(m.label) == surface;
        if (!exact && !contains_tokens(m.label, surface)) continue;
        const std::size_t len = exact ? 0 : text::codepoint_count(m.label);
        if (best != nullptr) {
            const bool best_exact = best_len == 0;
            if (best_exact && !exact) continue;
            if (best_exact == exact) {
                if (len > best_len) continue;
                if (len == best_len && m.concept_iri >= best->concept_iri) continue;
            }
        }
        best = &m;
        best_len = len;
    }
    if (best == nullptr) return out;

    out.linked_concept = kg.concept_by_iri(best->concept_iri);
    if (!out.linked_concept) return out;

    const double base = std::min(term.weight, 1.0);
    if (!(base > 0.0)) return out;
    LabelSet seen(term.surface);
    for (const auto& [label, lang] : ordered_labels(*out.linked_concept)) {
        if (!language_allowed(lang, options.languages)) continue;
        if (seen.add(label)) out.expansion_labels.push_back({label, lang, base});
    }
    return out;
}

std::vector<EnrichedTerm> expand_terms(const std::vector<EnrichedTerm>& terms, const KgClient& kg,
                                       const ExpandOptions& options) {
    if (options.depth < 0 || options.depth > 2) {
        throw Error(ErrorCode::InvalidArgument, "expansion depth must be 0, 1 or 2");
    }
    if (options.depth == 0) return terms;
    if (!(options.hop_decay > 0.0 && options.hop_decay <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "hop decay must be in (0, 1]");
    }

    std::vector<EnrichedTerm> out;
    out.reserve(terms.size());
    for (const auto& in : terms) {
        EnrichedTerm t = in;
        if (!t.linked_concept) {
            out.push_back(std::move(t));
            continue;
        }
        LabelSet seen(t.term.surface);
        std::vector<ExpansionLabel> labels;
        for (auto& l : t.expansion_labels) {
            if (language_allowed(l.language, options.languages) && seen.add(l.label)) labels.push_back(l);
        }

        const double base = std::min(t.term.weight, 1.0);
        std::set<std::string> visited{t.linked_concept->concept_iri};
        std::vector<std::string> frontier{t.linked_concept->concept_iri};
        std::size_t added = 0;
        for (int hop = 1; hop <= options.depth && base > 0.0; ++hop) {
            std::set<std::string> next;
            for (const auto& iri : frontier) {
                auto c = iri == t.linked_concept->concept_iri ? t.linked_concept : kg.concept_by_iri(iri);
                if (!c) continue;
                for (const auto& r : c->related) {
                    if (!visited.count(r.iri)) next.insert(r.iri);
                }
            }
            const double weight = base * std::pow(options.hop_decay, hop);
            for (const auto& iri : next) {
                visited.insert(iri);
                auto c = kg.concept_by_iri(iri);
                if (!c) continue;
                for (const auto& [label, lang] : ordered_labels(*c)) {
                    if (added >= options.max_related_labels) break;
                    if (!language_allowed(lang, options.languages)) continue;
                    if (seen.add(label)) {
                        labels.push_back({label, lang, weight});
                        ++added;
                    }
                }
            }
            frontier.assign(next.begin(), next.end());
        }
        t.expansion_labels = std::move(labels);
        out.push_back(std::move(t));
    }
    return out;
}

json to_json(const KgConcept& c) {
    json related = json::array();
    for (const auto& r : c.related) related.push_back({{"iri", r.iri}, {"kind", std::string(to_string(r.kind))}});
    return {{"concept_iri", c.concept_iri},
            {"pref_labels", c.pref_labels},
            {"alt_labels", c.alt_labels},
            {"related", related},
            {"source_graph", c.source_graph}};
}

json to_json(const EnrichedTerm& t) {
    json labels = json::array();
    for (const auto& l : t.expansion_labels) {
        labels.push_back({{"label", l.label}, {"language", l.language}, {"weight", l.weight}});
    }
    return {{"term", {{"surface", t.term.surface}, {"weight", t.term.weight}, {"source_fragments", t.term.source_fragments}}},
            {"concept", t.linked_concept ? to_json(*t.linked_concept) : json(nullptr)},
            {"expansion_labels", labels}};
}

} // namespace gw
