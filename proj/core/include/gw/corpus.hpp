#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gw {

/// Provenance for one document. Rendered into prompt headers and citations.
struct DocumentMeta {
    std::string doc_id;
    std::string title;
    std::vector<std::string> authors;
    std::optional<std::string> publication_date; // ISO-8601: YYYY, YYYY-MM or YYYY-MM-DD
    std::optional<std::string> source_uri;
    std::string language = "en";

    bool operator==(const DocumentMeta&) const = default;
};

/// Minimal Croissant-style dataset manifest (a documented subset; unknown keys
/// are ignored on read).
struct CollectionManifest {
    std::string collection_id;
    std::string title;
    std::vector<DocumentMeta> documents;
    std::string created_at = "1970-01-01T00:00:00Z";
    std::string manifest_version = "1.0";

    bool operator==(const CollectionManifest&) const = default;

    const DocumentMeta* find(std::string_view doc_id) const;
};

struct Document {
    DocumentMeta meta;
    std::string body;
};

/// Byte offsets into the normalized document body, half-open.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool operator==(const CharSpan&) const = default;
};

struct Fragment {
    std::string fragment_id;
    std::string doc_id;
    std::uint32_t ordinal = 0;
    std::string text;
    CharSpan span;

    bool operator==(const Fragment&) const = default;
};

/// Lengths are measured in UTF-8 bytes of the normalized body.
struct SplitPolicy {
    std::size_t min_fragment_chars = 80;
    std::size_t max_fragment_chars = 2000;
};

CollectionManifest parse_manifest(std::string_view json_text);
CollectionManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const CollectionManifest& manifest);

nlohmann::json meta_to_json(const DocumentMeta& meta);
DocumentMeta meta_from_json(const nlohmann::json& j, std::string_view where);

std::string fragment_id_for(std::string_view doc_id, std::uint32_t ordinal);

/// Paragraph splitting over the normalized body.
///
/// Paragraphs are separated by one or more blank lines. A paragraph longer
/// than max_fragment_chars is packed greedily from its sentences (a sentence
/// ends at '.', '?' or '!' followed by whitespace); a single sentence that is
/// still too long is cut at the last whitespace inside the window, or at a
/// code point boundary when there is none. A piece shorter than
/// min_fragment_chars that does not end a sentence (headings, captions) is
/// merged into its successor when the result stays within the maximum.
std::vector<Fragment> split_document(const Document& doc, const SplitPolicy& policy = {});

} // namespace gw
