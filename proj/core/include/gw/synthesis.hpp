#pragma once

#include "gw/http_json.hpp"
#include "gw/retrieval.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gw {

class TokenEstimator {
public:
    virtual ~TokenEstimator() = default;
    virtual std::size_t estimate(std::string_view text) const = 0;
};

/// ceil(bytes / 4).
class CharTokenEstimator final : public TokenEstimator {
public:
    std::size_t estimate(std::string_view text) const override { return (text.size() + 3) / 4; }
};

/// Tokens charged per block on top of header and fragments (source marker,
/// separators), and per fragment (blank-line separator).
inline constexpr std::size_t kBlockOverheadTokens = 4;
inline constexpr std::size_t kFragmentOverheadTokens = 1;

struct ContextBlock {
    DocumentMeta doc_meta;
    double doc_score = 0.0;
    double confidence = 0.0;
    std::string provenance_header;
    std::vector<std::string> fragment_ids;   // best hit first
    std::vector<std::string> fragment_texts; // aligned with fragment_ids
    std::size_t tokens = 0;
};

struct ContextPack {
    std::vector<ContextBlock> blocks; // cluster rank order
    std::size_t token_estimate = 0;   // <= budget
    std::size_t budget = 0;
};

/// Title, authors, (date) and uri joined by U+2014 separators, with placeholders for absent fields.
std::string provenance_header(const DocumentMeta& meta);

struct PackOptions {
    double safety_margin = 0.10; // fraction of the budget held back
};

/// Admits clusters in rank order; each is admitted whole or truncated from its
/// lowest-scoring end, and packing stops at the first cluster that cannot fit
/// its header plus best fragment. Throws BudgetTooSmall when not even the top
/// cluster fits (including when there are no clusters at all).
ContextPack pack_context(const RankedRetrieval& ranked, std::size_t budget_tokens,
                         const TokenEstimator& estimator = CharTokenEstimator{}, const PackOptions& options = {});

inline constexpr const char* kPromptTemplateVersion = "gw-prompt/1";

struct Prompt {
    std::string system;
    std::string user;

    /// system + blank line + user; what format_prompt() returns.
    std::string combined() const;
};

/// Renders the versioned prompt template: a system preamble; then for each
/// block "[SOURCE n] <provenance header>" followed by its fragments; then the
/// question; then the instruction to cite by [SOURCE n].
Prompt build_prompt(std::string_view query, const ContextPack& pack);
std::string format_prompt(std::string_view query, const ContextPack& pack);

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string model_id() const = 0;
    /// Throws ProviderUnavailable on failure.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// POST <path> {"model_id": m, "messages": [{"role", "content"}]} -> {"text": ...}
class HttpLlmProvider final : public LlmProvider {
public:
    HttpLlmProvider(std::shared_ptr<JsonHttpClient> client, std::string model_id, std::string path = "/v1/chat",
                    double requests_per_second = 0.0);

    std::string model_id() const override { return model_id_; }
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    std::shared_ptr<JsonHttpClient> client_;
    std::string model_id_;
    std::string path_;
    std::unique_ptr<TokenBucket> limiter_;
};

struct Citation {
    DocumentMeta doc_meta;
    double confidence = 0.0;
    std::vector<std::string> fragment_ids;
    std::vector<std::string> fragment_texts; // aligned with fragment_ids
};

struct Answer {
    std::string text;
    std::vector<Citation> citations; // confidence desc, doc_id asc
    std::string model_id;
    bool offline = false;
};

inline constexpr const char* kExtractiveModelId = "extractive/1";

/// The offline answer: "Based on <title>: " followed by the first three
/// sentences of the top block's best fragment.
std::string extractive_answer(const ContextPack& pack);

/// With llm == nullptr the extractive answer is produced (offline = true).
/// Citations are one per block, carrying the cluster confidence unchanged.
Answer synthesize(std::string_view query, const ContextPack& pack, LlmProvider* llm);

nlohmann::json to_json(const Citation& c);
nlohmann::json to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);

} // namespace gw
