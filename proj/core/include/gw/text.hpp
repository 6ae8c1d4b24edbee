#pragma once

#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text helpers shared by ingestion, term extraction and the
// hashing embedder. All inputs and outputs are UTF-8.
namespace gw::text {

/// Unicode NFC composition. Invalid UTF-8 sequences are replaced with U+FFFD.
std::string nfc(std::string_view in);

/// Body normalization applied before splitting: NFC, CRLF and lone CR become
/// LF, and runs of three or more newlines collapse to exactly two.
std::string normalize_body(std::string_view in);

/// NFC + lowercase + internal whitespace collapsed to one ASCII space, trimmed.
std::string fold(std::string_view in);

std::string trim(std::string_view in);

bool is_blank(std::string_view in);

struct Token {
    std::string text;       // folded (lowercase, NFC)
    bool starts_segment;    // punctuation other than '-' or '\'' separates it from the previous token
};

/// Splits into maximal runs of letters/digits. Hyphens and apostrophes split
/// tokens without starting a new segment; any other punctuation does.
std::vector<Token> tokenize(std::string_view in);

/// Token texts only.
std::vector<std::string> words(std::string_view in);

/// Token sequences grouped by segment; n-grams never span segments.
std::vector<std::vector<std::string>> segments(std::string_view in);

std::size_t codepoint_count(std::string_view in);

bool is_numeric(std::string_view token);

} // namespace gw::text
