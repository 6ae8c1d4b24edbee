#pragma once

#include "gw/error.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gw {

std::string sha256_hex(std::string_view data);

enum class TranscriptMode {
    Live,   // network only
    Record, // network, then store the exchange
    Replay, // stored exchanges only; a miss is a provider failure
};

/// Directory of recorded provider exchanges, one `<request_hash>.json` file per
/// request holding {"request": ..., "response": ...}. The hash covers the
/// request path and canonical JSON body but not the host or credentials, so a
/// transcript replays against any base URL.
class TranscriptStore {
public:
    explicit TranscriptStore(std::filesystem::path dir);

    static std::string request_hash(std::string_view path, const nlohmann::json& body);

    std::optional<nlohmann::json> find(const std::string& hash) const;
    void record(const std::string& hash, const nlohmann::json& request, const nlohmann::json& response);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{200};
};

/// Thread-safe token bucket; acquire() blocks until a token is available.
class TokenBucket {
public:
    TokenBucket(double tokens_per_second, double burst);
    void acquire();

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct HttpEndpoint {
    std::string base_url;                 // scheme://host[:port][/prefix]
    std::optional<std::string> api_key;   // sent as "Authorization: Bearer <key>"
    std::chrono::milliseconds timeout{30000};
};

/// Reads an API key from the named environment variable; empty name or unset
/// variable gives nullopt.
std::optional<std::string> api_key_from_env(std::string_view var);

/// JSON-over-HTTP POST client used by the embedding, LLM and term extraction
/// providers. Transient failures (connection errors, 429, 5xx) are retried with
/// exponential backoff; persistent failure throws Error(failure_code).
class JsonHttpClient {
public:
    JsonHttpClient(HttpEndpoint endpoint, std::string provider_name, ErrorCode failure_code,
                   TranscriptMode mode = TranscriptMode::Live, TranscriptStore* transcripts = nullptr,
                   RetryPolicy retry = {});

    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    const std::string& provider_name() const { return provider_name_; }

private:
    nlohmann::json post_live(const std::string& path, const nlohmann::json& body);
    [[noreturn]] void fail(const std::string& what) const;

    HttpEndpoint endpoint_;
    std::string provider_name_;
    ErrorCode failure_code_;
    TranscriptMode mode_;
    TranscriptStore* transcripts_;
    RetryPolicy retry_;
};

/// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(std::string_view url);

} // namespace gw
