#include "gw/corpus.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace gw {

namespace {

using nlohmann::json;

std::string required_string(const json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::MalformedManifest,
                    "missing or non-string field '" + std::string(where) + key + "'");
    }
    std::string value = it->get<std::string>();
    if (text::trim(value).empty()) {
        throw Error(ErrorCode::MalformedManifest, "empty field '" + std::string(where) + key + "'");
    }
    return value;
}

std::optional<std::string> optional_string(const json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw Error(ErrorCode::MalformedManifest, "non-string field '" + std::string(where) + key + "'");
    }
    return it->get<std::string>();
}

bool valid_iso_date(const std::string& s) {
    static const std::regex re(R"(^\d{4}(-(0[1-9]|1[0-2])(-(0[1-9]|[12]\d|3[01]))?)?$)");
    return std::regex_match(s, re);
}

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

CharSpan trimmed(const std::string& body, CharSpan s) {
    while (s.start < s.end && is_ascii_space(body[s.start])) ++s.start;
    while (s.end > s.start && is_ascii_space(body[s.end - 1])) --s.end;
    return s;
}

bool is_continuation_byte(char c) {
    return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

bool ends_sentence(const std::string& body, CharSpan s) {
    std::size_t e = s.end;
    while (e > s.start && (body[e - 1] == '"' || body[e - 1] == '\'' || body[e - 1] == ')' ||
                           body[e - 1] == ']')) {
        --e;
    }
    if (e == s.start) return false;
    char c = body[e - 1];
    return c == '.' || c == '?' || c == '!';
}

// Paragraph spans: maximal runs of non-blank lines, trimmed.
std::vector<CharSpan> paragraphs(const std::string& body) {
    std::vector<CharSpan> out;
    std::size_t pos = 0;
    std::optional<std::size_t> para_start;
    std::size_t para_end = 0;
    while (pos <= body.size()) {
        std::size_t nl = body.find('\n', pos);
        std::size_t line_end = nl == std::string::npos ? body.size() : nl;
        std::string_view line(body.data() + pos, line_end - pos);
        if (text::is_blank(line)) {
            if (para_start) {
                out.push_back(trimmed(body, {*para_start, para_end}));
                para_start.reset();
            }
        } else {
            if (!para_start) para_start = pos;
            para_end = line_end;
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    if (para_start) out.push_back(trimmed(body, {*para_start, para_end}));
    return out;
}

std::vector<CharSpan> sentences(const std::string& body, CharSpan para) {
    std::vector<CharSpan> out;
    std::size_t start = para.start;
    for (std::size_t i = para.start; i + 1 < para.end; ++i) {
        char c = body[i];
        if ((c == '.' || c == '?' || c == '!') && is_ascii_space(body[i + 1])) {
            CharSpan s = trimmed(body, {start, i + 1});
            if (s.size() > 0) out.push_back(s);
            start = i + 1;
        }
    }
    CharSpan last = trimmed(body, {start, para.end});
    if (last.size() > 0) out.push_back(last);
    return out;
}

void hard_split(const std::string& body, CharSpan s, std::size_t max, std::vector<CharSpan>& out) {
    std::size_t pos = s.start;
    while (pos < s.end) {
        if (s.end - pos <= max) {
            out.push_back({pos, s.end});
            return;
        }
        std::size_t limit = pos + max;
        std::size_t cut = limit;
        while (cut > pos && !is_ascii_space(body[cut])) --cut;
        if (cut > pos) {
            CharSpan piece = trimmed(body, {pos, cut});
            if (piece.size() > 0) out.push_back(piece);
            pos = cut;
        } else {
            cut = limit;
            while (cut > pos && is_continuation_byte(body[cut])) --cut;
            if (cut == pos) cut = limit;
            out.push_back({pos, cut});
            pos = cut;
        }
        while (pos < s.end && is_ascii_space(body[pos])) ++pos;
    }
}

void split_long(const std::string& body, CharSpan para, std::size_t max, std::vector<CharSpan>& out) {
    std::optional<CharSpan> chunk;
    for (const CharSpan& sent : sentences(body, para)) {
        if (chunk && sent.end - chunk->start <= max) {
            chunk->end = sent.end;
            continue;
        }
        if (chunk) out.push_back(*chunk);
        chunk.reset();
        if (sent.size() > max) {
            hard_split(body, sent, max, out);
        } else {
            chunk = sent;
        }
    }
    if (chunk) out.push_back(*chunk);
}

} // namespace

const DocumentMeta* CollectionManifest::find(std::string_view doc_id) const {
    for (const auto& d : documents) {
        if (d.doc_id == doc_id) return &d;
    }
    return nullptr;
}

DocumentMeta meta_from_json(const json& j, std::string_view where) {
    if (!j.is_object()) {
        throw Error(ErrorCode::MalformedManifest, "'" + std::string(where) + "' is not an object");
    }
    const std::string prefix = std::string(where) + ".";
    DocumentMeta meta;
    meta.doc_id = required_string(j, "doc_id", prefix);
    meta.title = required_string(j, "title", prefix);
    if (auto it = j.find("authors"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw Error(ErrorCode::MalformedManifest, "field '" + prefix + "authors' must be an array");
        }
        for (const auto& a : *it) {
            if (!a.is_string()) {
                throw Error(ErrorCode::MalformedManifest, "field '" + prefix + "authors' must hold strings");
            }
            meta.authors.push_back(a.get<std::string>());
        }
    }
    meta.publication_date = optional_string(j, "publication_date", prefix);
    if (meta.publication_date && !valid_iso_date(*meta.publication_date)) {
        throw Error(ErrorCode::MalformedManifest,
                    "field '" + prefix + "publication_date' is not an ISO-8601 date");
    }
    meta.source_uri = optional_string(j, "source_uri", prefix);
    if (auto lang = optional_string(j, "language", prefix)) {
        if (lang->empty()) {
            throw Error(ErrorCode::MalformedManifest, "empty field '" + prefix + "language'");
        }
        meta.language = *lang;
    }
    return meta;
}

json meta_to_json(const DocumentMeta& meta) {
    json j;
    j["doc_id"] = meta.doc_id;
    j["title"] = meta.title;
    j["authors"] = meta.authors;
    j["publication_date"] = meta.publication_date ? json(*meta.publication_date) : json(nullptr);
    j["source_uri"] = meta.source_uri ? json(*meta.source_uri) : json(nullptr);
    j["language"] = meta.language;
    return j;
}

CollectionManifest parse_manifest(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedManifest, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw Error(ErrorCode::MalformedManifest, "manifest root must be an object");
    }
    if (auto t = j.find("@type"); t != j.end() && !t->is_string()) {
        throw Error(ErrorCode::MalformedManifest, "field '@type' must be a string");
    }

    CollectionManifest m;
    m.collection_id = required_string(j, "collection_id", "");
    m.title = required_string(j, "title", "");
    if (auto v = optional_string(j, "created_at", "")) m.created_at = *v;
    if (auto v = optional_string(j, "manifest_version", "")) m.manifest_version = *v;

    auto docs = j.find("documents");
    if (docs == j.end() || !docs->is_array()) {
        throw Error(ErrorCode::MalformedManifest, "missing or non-array field 'documents'");
    }
    if (docs->empty()) {
        throw Error(ErrorCode::MalformedManifest, "field 'documents' is empty");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < docs->size(); ++i) {
        DocumentMeta meta = meta_from_json((*docs)[i], "documents[" + std::to_string(i) + "]");
        if (!seen.insert(meta.doc_id).second) {
            throw Error(ErrorCode::DuplicateDocId, "doc_id '" + meta.doc_id + "' appears more than once");
        }
        m.documents.push_back(std::move(meta));
    }
    return m;
}

CollectionManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot read manifest " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

json manifest_to_json(const CollectionManifest& m) {
    json j;
    j["@type"] = "sc:Dataset";
    j["collection_id"] = m.collection_id;
    j["title"] = m.title;
    j["created_at"] = m.created_at;
    j["manifest_version"] = m.manifest_version;
    j["documents"] = json::array();
    for (const auto& d : m.documents) j["documents"].push_back(meta_to_json(d));
    return j;
}

std::string fragment_id_for(std::string_view doc_id, std::uint32_t ordinal) {
    return std::string(doc_id) + ":" + std::to_string(ordinal);
}

std::vector<Fragment> split_document(const Document& doc, const SplitPolicy& policy) {
    if (policy.max_fragment_chars < 8 || policy.min_fragment_chars > policy.max_fragment_chars) {
        throw Error(ErrorCode::InvalidArgument, "split policy bounds out of range");
    }
    const std::string body = text::normalize_body(doc.body);
    if (text::is_blank(body)) {
        throw Error(ErrorCode::EmptyDocument, "document '" + doc.meta.doc_id + "' has an empty body");
    }

    std::vector<CharSpan> pieces;
    for (const CharSpan& para : paragraphs(body)) {
        if (para.size() <= policy.max_fragment_chars) {
            pieces.push_back(para);
        } else {
            split_long(body, para, policy.max_fragment_chars, pieces);
        }
    }

    std::vector<CharSpan> merged;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        CharSpan cur = pieces[i];
        while (cur.size() < policy.min_fragment_chars && !ends_sentence(body, cur) &&
               i + 1 < pieces.size() &&
               pieces[i + 1].end - cur.start <= policy.max_fragment_chars) {
            cur.end = pieces[++i].end;
        }
        merged.push_back(cur);
    }

    std::vector<Fragment> out;
    out.reserve(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        Fragment f;
        f.doc_id = doc.meta.doc_id;
        f.ordinal = static_cast<std::uint32_t>(i);
        f.fragment_id = fragment_id_for(f.doc_id, f.ordinal);
        f.span = merged[i];
        f.text = body.substr(f.span.start, f.span.size());
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace gw
