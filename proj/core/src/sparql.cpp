#include "gw/sparql.hpp"

#include "gw/error.hpp"
#include "gw/http_json.hpp"
#include "gw/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace gw {

namespace {

using nlohmann::json;

std::string now_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string values_clause(const std::string& var, const std::vector<std::string>& iris) {
    std::string out = "VALUES ?" + var + " {";
    for (const auto& iri : iris) out += " <" + iri + ">";
    return out + " }";
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

const json* binding(const json& row, const char* var) {
    auto it = row.find(var);
    return it == row.end() ? nullptr : &*it;
}

} // namespace

std::string sparql_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    return out;
}

SparqlKgClient::SparqlKgClient(SparqlConfig config) : config_(std::move(config)) {
    for (const auto* list : {&config_.pref_label_predicates, &config_.alt_label_predicates, &config_.related_predicates,
                             &config_.broader_predicates, &config_.custom_relation_predicates}) {
        for (const auto& iri : *list) {
            if (!is_iri(iri)) throw Error(ErrorCode::InvalidArgument, "invalid predicate IRI '" + iri + "'");
        }
    }
    if (!config_.cache_file || !std::filesystem::exists(*config_.cache_file)) return;
    std::ifstream in(*config_.cache_file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            cache_[j.at("request_hash").get<std::string>()] = j.at("response");
        } catch (const json::exception&) {
            // a torn final line from an interrupted append is ignored
        }
    }
}

std::size_t SparqlKgClient::cached_responses() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::string SparqlKgClient::label_query(const std::string& folded_surface) const {
    std::vector<std::string> preds = config_.pref_label_predicates;
    preds.insert(preds.end(), config_.alt_label_predicates.begin(), config_.alt_label_predicates.end());
    std::ostringstream q;
    q << "SELECT DISTINCT ?c ?label WHERE { " << values_clause("p", preds) << " ?c ?p ?label . "
      << "FILTER(isIRI(?c) && CONTAINS(LCASE(STR(?label)), \"" << sparql_escape(folded_surface) << "\")) } "
      << "ORDER BY ?c ?label LIMIT " << config_.match_limit;
    return q.str();
}

std::string SparqlKgClient::concept_query(const std::string& iri) const {
    std::vector<std::string> preds;
    for (const auto* list : {&config_.pref_label_predicates, &config_.alt_label_predicates, &config_.related_predicates,
                             &config_.broader_predicates, &config_.custom_relation_predicates}) {
        preds.insert(preds.end(), list->begin(), list->end());
    }
    std::ostringstream q;
    q << "SELECT ?p ?o WHERE { " << values_clause("p", preds) << " <" << iri << "> ?p ?o . }";
    return q.str();
}

void SparqlKgClient::unavailable(const std::string& what) const {
    throw Error(ErrorCode::KgUnavailable, what, "kg:" + config_.endpoint);
}

json SparqlKgClient::fetch(const std::string& query) const {
    if (config_.endpoint.empty()) unavailable("no SPARQL endpoint configured");
    auto [host, path] = split_base_url(config_.endpoint);
    if (path.empty()) path = "/";
    httplib::Client client(host);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    httplib::Headers headers{{"Accept", "application/sparql-results+json"}};
    if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);
    httplib::Params params{{"query", query}};

    std::string last_error;
    auto backoff = std::chrono::milliseconds(100);
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(path, headers, params);
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            unavailable(config_.endpoint + ": HTTP " + std::to_string(res->status));
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            unavailable(config_.endpoint + ": malformed results: " + e.what());
        }
    }
    unavailable(config_.endpoint + ": " + last_error);
}

json SparqlKgClient::select(const std::string& query) const {
    const std::string hash = sha256_hex(config_.endpoint + "\n" + query);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(hash); it != cache_.end()) return it->second;
    }
    if (config_.cache_only) unavailable("SPARQL cache miss for " + hash);
    json response = fetch(query);
    std::lock_guard lock(mutex_);
    cache_[hash] = response;
    if (config_.cache_file) {
        if (config_.cache_file->has_parent_path()) std::filesystem::create_directories(config_.cache_file->parent_path());
        std::ofstream out(*config_.cache_file, std::ios::app);
        out << json{{"request_hash", hash}, {"response", response}, {"fetched_at", now_utc()}}.dump() << '\n';
    }
    return response;
}

std::vector<LabelMatch> SparqlKgClient::match_labels(const std::string& folded_surface) const {
    std::vector<LabelMatch> out;
    if (folded_surface.empty()) return out;
    json result = select(label_query(folded_surface));
    try {
        for (const auto& row : result.at("results").at("bindings")) {
            const json* c = binding(row, "c");
            const json* l = binding(row, "label");
            if (c == nullptr || l == nullptr || c->value("type", "") != "uri") continue;
            LabelMatch m;
            m.concept_iri = c->at("value").get<std::string>();
            m.label = l->at("value").get<std::string>();
            m.exact = text::fold(m.label) == folded_surface;
            out.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        unavailable(std::string("unexpected SPARQL result shape: ") + e.what());
    }
    return out;
}

std::optional<KgConcept> SparqlKgClient::concept_by_iri(const std::string& iri) const {
    if (!is_iri(iri)) return std::nullopt;
    json result = select(concept_query(iri));
    KgConcept c;
    c.concept_iri = iri;
    c.source_graph = config_.endpoint;
    std::map<std::string, std::set<std::string>> prefs;
    std::map<std::string, std::set<std::string>> alts;
    std::set<std::string> seen_rel;
    try {
        for (const auto& row : result.at("results").at("bindings")) {
            const json* p = binding(row, "p");
            const json* o = binding(row, "o");
            if (p == nullptr || o == nullptr) continue;
            const std::string pred = p->at("value").get<std::string>();
            const std::string value = o->at("value").get<std::string>();
            const std::string type = o->value("type", "");
            const std::string lang = o->value("xml:lang", "");
            if (type == "literal" && contains(config_.pref_label_predicates, pred)) {
                prefs[lang].insert(value);
            } else if (type == "literal" && contains(config_.alt_label_predicates, pred)) {
                alts[lang].insert(value);
            } else if (type == "uri" && value != iri && seen_rel.insert(value).second) {
                RelationKind kind = RelationKind::Custom;
                if (contains(config_.related_predicates, pred)) kind = RelationKind::Related;
                else if (contains(config_.broader_predicates, pred)) kind = RelationKind::Broader;
                c.related.push_back({value, kind});
            }
        }
    } catch (const json::exception& e) {
        unavailable(std::string("unexpected SPARQL result shape: ") + e.what());
    }
    // One pref label per language (smallest); the rest become alt labels.
    for (auto& [lang, labels] : prefs) {
        auto it = labels.begin();
        c.pref_labels[lang] = *it;
        for (++it; it != labels.end(); ++it) alts[lang].insert(*it);
    }
    if (c.pref_labels.empty()) {
        for (auto& [lang, labels] : alts) {
            if (labels.empty()) continue;
            c.pref_labels[lang] = *labels.begin();
            labels.erase(labels.begin());
            break;
        }
    }
    if (c.pref_labels.empty()) return std::nullopt;
    for (auto& [lang, labels] : alts) {
        for (const auto& l : labels) {
            if (c.pref_labels.count(lang) && c.pref_labels[lang] == l) continue;
            c.alt_labels[lang].push_back(l);
        }
    }
    std::sort(c.related.begin(), c.related.end(), [](const auto& a, const auto& b) { return a.iri < b.iri; });
    return c;
}

} // namespace gw
