#include "gw/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace gw::text {

namespace {

const icu::Normalizer2& nfc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

bool is_space_cp(UChar32 c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
           u_isUWhiteSpace(c);
}

bool is_joiner(UChar32 c) {
    // ASCII hyphen, apostrophe, right single quote, hyphen, non-breaking hyphen
    return c == '-' || c == '\'' || c == 0x2019 || c == 0x2010 || c == 0x2011;
}

} // namespace

std::string nfc(std::string_view in) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(in.data(), static_cast<int32_t>(in.size())));
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfc_instance().normalize(u, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("NFC normalization failed");
    }
    std::string result;
    out.toUTF8String(result);
    return result;
}

std::string normalize_body(std::string_view in) {
    std::string composed = nfc(in);
    std::string out;
    out.reserve(composed.size());
    for (std::size_t i = 0; i < composed.size(); ++i) {
        char c = composed[i];
        if (c == '\r') {
            if (i + 1 < composed.size() && composed[i + 1] == '\n') continue;
            c = '\n';
        }
        out.push_back(c);
    }
    std::string collapsed;
    collapsed.reserve(out.size());
    std::size_t run = 0;
    for (char c : out) {
        if (c == '\n') {
            if (++run > 2) continue;
        } else {
            run = 0;
        }
        collapsed.push_back(c);
    }
    return collapsed;
}

std::string fold(std::string_view in) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(in.data(), static_cast<int32_t>(in.size())));
    u.toLower(icu::Locale::getRoot());
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString normalized = nfc_instance().normalize(u, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("NFC normalization failed");
    }
    std::string lowered;
    normalized.toUTF8String(lowered);

    std::string out;
    out.reserve(lowered.size());
    bool pending_space = false;
    int32_t i = 0;
    const auto* s = reinterpret_cast<const uint8_t*>(lowered.data());
    const auto len = static_cast<int32_t>(lowered.size());
    while (i < len) {
        int32_t start = i;
        UChar32 c;
        U8_NEXT(s, i, len, c);
        if (is_space_cp(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(lowered, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
    }
    return out;
}

std::string trim(std::string_view in) {
    std::size_t b = 0;
    std::size_t e = in.size();
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (b < e && ws(in[b])) ++b;
    while (e > b && ws(in[e - 1])) --e;
    return std::string(in.substr(b, e - b));
}

bool is_blank(std::string_view in) {
    const auto* s = reinterpret_cast<const uint8_t*>(in.data());
    const auto len = static_cast<int32_t>(in.size());
    int32_t i = 0;
    while (i < len) {
        UChar32 c;
        U8_NEXT(s, i, len, c);
        if (!is_space_cp(c)) return false;
    }
    return true;
}

std::vector<Token> tokenize(std::string_view in) {
    const std::string folded = fold(in);
    std::vector<Token> tokens;
    const auto* s = reinterpret_cast<const uint8_t*>(folded.data());
    const auto len = static_cast<int32_t>(folded.size());
    int32_t i = 0;
    std::string current;
    bool segment_break = true;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(Token{std::move(current), segment_break});
            current.clear();
            segment_break = false;
        }
    };
    while (i < len) {
        int32_t start = i;
        UChar32 c;
        U8_NEXT(s, i, len, c);
        if (c >= 0 && (u_isalnum(c) || u_getCombiningClass(c) != 0 ||
                       u_charType(c) == U_NON_SPACING_MARK)) {
            current.append(folded, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
            continue;
        }
        flush();
        if (is_space_cp(c) || is_joiner(c)) continue;
        segment_break = true;
    }
    flush();
    return tokens;
}

std::vector<std::string> words(std::string_view in) {
    std::vector<std::string> out;
    for (auto& t : tokenize(in)) out.push_back(std::move(t.text));
    return out;
}

std::vector<std::vector<std::string>> segments(std::string_view in) {
    std::vector<std::vector<std::string>> out;
    for (auto& t : tokenize(in)) {
        if (t.starts_segment || out.empty()) out.emplace_back();
        out.back().push_back(std::move(t.text));
    }
    return out;
}

std::size_t codepoint_count(std::string_view in) {
    std::size_t n = 0;
    for (char c : in) {
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    }
    return n;
}

bool is_numeric(std::string_view token) {
    const auto* s = reinterpret_cast<const uint8_t*>(token.data());
    const auto len = static_cast<int32_t>(token.size());
    int32_t i = 0;
    if (len == 0) return false;
    while (i < len) {
        UChar32 c;
        U8_NEXT(s, i, len, c);
        if (!u_isdigit(c)) return false;
    }
    return true;
}

} // namespace gw::text
