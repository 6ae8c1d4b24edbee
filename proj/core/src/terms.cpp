#include "gw/terms.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

namespace gw {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxTermTokens = 10;
constexpr const char* kQueryFragmentId = "query";

class StopwordSet {
public:
    explicit StopwordSet(const ExtractConfig& config) {
        for (const auto& [lang, list] : config.extra_stopwords) {
            for (const auto& w : list) extra_.insert(text::fold(w));
        }
    }

    bool contains(const std::string& token) const {
        return english_stopwords().count(token) > 0 || extra_.count(token) > 0;
    }

private:
    std::unordered_set<std::string> extra_;
};

bool valid_edge(const std::string& token, const StopwordSet& stop) {
    return text::codepoint_count(token) > 1 && !text::is_numeric(token) && !stop.contains(token);
}

std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t n) {
    std::string out = tokens[from];
    for (std::size_t i = 1; i < n; ++i) {
        out += ' ';
        out += tokens[from + i];
    }
    return out;
}

std::size_t token_count(const std::string& surface) {
    return static_cast<std::size_t>(std::count(surface.begin(), surface.end(), ' ')) + 1;
}

struct Occurrences {
    std::size_t tf = 0;
    std::vector<std::size_t> fragments; // indices, ascending
    std::set<std::string_view> texts;   // distinct fragment texts containing it
};

bool better(const Term& a, const Term& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.surface < b.surface;
}

// Normalizes raw candidates and keeps those that occur token-wise in the
// fragment they were proposed for.
std::vector<std::unordered_set<std::string>> validate(
    const std::vector<std::vector<std::string>>& raw,
    const std::vector<std::vector<std::vector<std::string>>>& segs) {
    std::vector<std::unordered_set<std::string>> out(segs.size());
    for (std::size_t f = 0; f < segs.size() && f < raw.size(); ++f) {
        std::unordered_set<std::string> present;
        std::size_t longest = 0;
        std::unordered_set<std::string> wanted;
        for (const auto& cand : raw[f]) {
            auto toks = text::words(cand);
            if (toks.empty() || toks.size() > kMaxTermTokens) continue;
            longest = std::max(longest, toks.size());
            wanted.insert(join(toks, 0, toks.size()));
        }
        for (const auto& seg : segs[f]) {
            for (std::size_t i = 0; i < seg.size(); ++i) {
                for (std::size_t n = 1; n <= longest && i + n <= seg.size(); ++n) {
                    auto g = join(seg, i, n);
                    if (wanted.count(g)) present.insert(std::move(g));
                }
            }
        }
        out[f] = std::move(present);
    }
    return out;
}

std::vector<Term> score(std::span<const Fragment> fragments,
                        const std::vector<std::vector<std::vector<std::string>>>& segs,
                        const std::vector<std::unordered_set<std::string>>& accepted) {
    std::unordered_map<std::string, Occurrences> occ;
    std::size_t longest = 0;
    for (const auto& set : accepted) {
        for (const auto& s : set) {
            occ.try_emplace(s);
            longest = std::max(longest, token_count(s));
        }
    }
    if (occ.empty()) return {};

    std::set<std::string_view> distinct_texts;
    for (std::size_t f = 0; f < fragments.size(); ++f) {
        distinct_texts.insert(fragments[f].text);
        for (const auto& seg : segs[f]) {
            for (std::size_t i = 0; i < seg.size(); ++i) {
                for (std::size_t n = 1; n <= longest && i + n <= seg.size(); ++n) {
                    auto it = occ.find(join(seg, i, n));
                    if (it == occ.end()) continue;
                    Occurrences& o = it->second;
                    ++o.tf;
                    if (o.fragments.empty() || o.fragments.back() != f) o.fragments.push_back(f);
                    o.texts.insert(fragments[f].text);
                }
            }
        }
    }

    const double n_docs = static_cast<double>(distinct_texts.size());
    std::vector<Term> terms;
    terms.reserve(occ.size());
    for (auto& [surface, o] : occ) {
        const double df = static_cast<double>(o.texts.size());
        const double idf = std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
        Term t;
        t.surface = surface;
        t.weight = static_cast<double>(o.tf) * idf * static_cast<double>(token_count(surface));
        for (std::size_t f : o.fragments) t.source_fragments.push_back(fragments[f].fragment_id);
        terms.push_back(std::move(t));
    }
    std::sort(terms.begin(), terms.end(), better);
    return terms;
}

} // namespace

std::string StatisticalTermExtractor::id() const {
    return std::string("statistical-ngram-tfidf/1 stopwords=") + kStopwordListVersion;
}

std::vector<std::vector<std::string>> StatisticalTermExtractor::candidates(std::span<const Fragment> fragments,
                                                                           const ExtractConfig& config) {
    const StopwordSet stop(config);
    const std::size_t max_n = std::clamp<std::size_t>(config.max_ngram, 1, kMaxTermTokens);
    std::vector<std::vector<std::string>> out;
    out.reserve(fragments.size());
    for (const auto& frag : fragments) {
        std::set<std::string> found;
        for (const auto& seg : text::segments(frag.text)) {
            for (std::size_t i = 0; i < seg.size(); ++i) {
                if (!valid_edge(seg[i], stop)) continue;
                for (std::size_t n = 1; n <= max_n && i + n <= seg.size(); ++n) {
                    if (!valid_edge(seg[i + n - 1], stop)) continue;
                    found.insert(join(seg, i, n));
                }
            }
        }
        out.emplace_back(found.begin(), found.end());
    }
    return out;
}

LlmTermExtractor::LlmTermExtractor(std::shared_ptr<JsonHttpClient> client, std::string model_id, std::string path,
                                   std::size_t batch_size)
    : client_(std::move(client)), model_id_(std::move(model_id)), path_(std::move(path)),
      batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::string LlmTermExtractor::id() const { return "llm:" + model_id_ + "+tfidf/1"; }

std::vector<std::vector<std::string>> LlmTermExtractor::candidates(std::span<const Fragment> fragments,
                                                                   const ExtractConfig&) {
    std::vector<std::vector<std::string>> out(fragments.size());
    for (std::size_t begin = 0; begin < fragments.size(); begin += batch_size_) {
        const std::size_t end = std::min(fragments.size(), begin + batch_size_);
        json request{{"model_id", model_id_}, {"fragments", json::array()}};
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t i = begin; i < end; ++i) {
            request["fragments"].push_back({{"fragment_id", fragments[i].fragment_id}, {"text", fragments[i].text}});
            index.emplace(fragments[i].fragment_id, i);
        }
        json response = client_->post(path_, request);
        const json* results = response.is_array() ? &response : nullptr;
        if (results == nullptr && response.is_object() && response.contains("results")) results = &response["results"];
        if (results == nullptr || !results->is_array()) {
            throw Error(ErrorCode::ExtractorUnavailable, client_->provider_name() + ": response lacks 'results'",
                        client_->provider_name());
        }
        for (const auto& r : *results) {
            if (!r.is_object() || !r.contains("fragment_id") || !r.contains("terms")) continue;
            auto it = index.find(r["fragment_id"].get<std::string>());
            if (it == index.end() || !r["terms"].is_array()) continue;
            for (const auto& t : r["terms"]) {
                if (t.is_string()) out[it->second].push_back(t.get<std::string>());
            }
        }
    }
    return out;
}

TermTable extract_terms(std::span<const Fragment> fragments, TermExtractor& extractor, const ExtractConfig& config,
                        std::string collection_id) {
    if (fragments.empty()) throw Error(ErrorCode::InvalidArgument, "extract_terms: no fragments");
    std::vector<std::vector<std::vector<std::string>>> segs;
    segs.reserve(fragments.size());
    for (const auto& f : fragments) segs.push_back(text::segments(f.text));

    auto raw = extractor.candidates(fragments, config);
    auto accepted = validate(raw, segs);

    TermTable table;
    table.collection_id = std::move(collection_id);
    table.extractor_id = extractor.id();
    table.terms = score(fragments, segs, accepted);
    if (table.terms.size() > config.max_terms_per_collection) table.terms.resize(config.max_terms_per_collection);
    return table;
}

std::vector<Term> extract_query_terms(std::string_view query, TermExtractor& extractor, const ExtractConfig& config) {
    const std::string trimmed = text::trim(query);
    if (trimmed.empty() || text::is_blank(trimmed)) throw Error(ErrorCode::EmptyQuery, "query is empty");
    Fragment pseudo;
    pseudo.fragment_id = kQueryFragmentId;
    pseudo.text = trimmed;
    pseudo.span = {0, trimmed.size()};
    std::span<const Fragment> one(&pseudo, 1);

    auto segs = std::vector<std::vector<std::vector<std::string>>>{text::segments(pseudo.text)};
    auto accepted = validate(extractor.candidates(one, config), segs);
    auto terms = score(one, segs, accepted);
    if (terms.size() > config.max_terms_per_query) terms.resize(config.max_terms_per_query);
    double total = 0.0;
    for (const auto& t : terms) total += t.weight;
    if (total > 0.0) {
        for (auto& t : terms) t.weight /= total;
    }
    return terms;
}

void write_term_table(const TermTable& table, std::ostream& out) {
    json header{{"record", "header"},
                {"format", "gw-terms/1"},
                {"collection_id", table.collection_id},
                {"extractor_id", table.extractor_id},
                {"term_count", table.terms.size()}};
    out << header.dump() << '\n';
    for (const auto& t : table.terms) {
        json line{{"record", "term"}, {"surface", t.surface}, {"weight", t.weight}, {"source_fragments", t.source_fragments}};
        out << line.dump() << '\n';
    }
}

TermTable read_term_table(std::istream& in) {
    TermTable table;
    std::string line;
    bool have_header = false;
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (!have_header) {
                if (j.at("record") != "header") throw Error(ErrorCode::Io, "term table: missing header");
                table.collection_id = j.at("collection_id").get<std::string>();
                table.extractor_id = j.at("extractor_id").get<std::string>();
                have_header = true;
                continue;
            }
            table.terms.push_back(Term{j.at("surface").get<std::string>(), j.at("weight").get<double>(),
                                       j.at("source_fragments").get<std::vector<std::string>>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("term table: ") + e.what());
    }
    if (!have_header) throw Error(ErrorCode::Io, "term table: missing header");
    return table;
}

} // namespace gw
