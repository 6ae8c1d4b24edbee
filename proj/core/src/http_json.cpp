#include "gw/http_json.hpp"

#include "gw/fragment_store.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace gw {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string TranscriptStore::request_hash(std::string_view path, const json& body) {
    std::string key(path);
    key += '\n';
    key += body.dump();
    return sha256_hex(key);
}

std::optional<json> TranscriptStore::find(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    std::ifstream in(dir_ / (hash + ".json"), std::ios::binary);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        return j.at("response");
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void TranscriptStore::record(const std::string& hash, const json& request, const json& response) {
    std::lock_guard lock(mutex_);
    json j{{"request_hash", hash}, {"request", request}, {"response", response}};
    write_file_atomic(dir_ / (hash + ".json"), j.dump(2) + "\n");
}

TokenBucket::TokenBucket(double tokens_per_second, double burst)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        std::chrono::duration<double> elapsed = now - last_;
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

std::optional<std::string> api_key_from_env(std::string_view var) {
    if (var.empty()) return std::nullopt;
    const char* v = std::getenv(std::string(var).c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::pair<std::string, std::string> split_base_url(std::string_view url) {
    auto scheme = url.find("://");
    std::size_t host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
    auto slash = url.find('/', host_start);
    if (slash == std::string_view::npos) return {std::string(url), ""};
    std::string prefix(url.substr(slash));
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {std::string(url.substr(0, slash)), prefix};
}

JsonHttpClient::JsonHttpClient(HttpEndpoint endpoint, std::string provider_name, ErrorCode failure_code,
                               TranscriptMode mode, TranscriptStore* transcripts, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), provider_name_(std::move(provider_name)), failure_code_(failure_code),
      mode_(mode), transcripts_(transcripts), retry_(retry) {
    if (mode_ != TranscriptMode::Live && transcripts_ == nullptr) {
        throw Error(ErrorCode::InvalidArgument, provider_name_ + ": transcript mode needs a transcript store");
    }
}

void JsonHttpClient::fail(const std::string& what) const {
    throw Error(failure_code_, provider_name_ + ": " + what, provider_name_);
}

json JsonHttpClient::post(const std::string& path, const json& body) {
    if (mode_ == TranscriptMode::Live) return post_live(path, body);
    const std::string hash = TranscriptStore::request_hash(path, body);
    if (mode_ == TranscriptMode::Replay) {
        if (auto hit = transcripts_->find(hash)) return *hit;
        fail("no recorded transcript for request " + hash);
    }
    json response = post_live(path, body);
    transcripts_->record(hash, json{{"path", path}, {"body", body}}, response);
    return response;
}

json JsonHttpClient::post_live(const std::string& path, const json& body) {
    if (endpoint_.base_url.empty()) fail("no endpoint configured");
    auto [host, prefix] = split_base_url(endpoint_.base_url);
    httplib::Client client(host);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout).count();
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout).count() % 1000000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (endpoint_.api_key) headers.emplace("Authorization", "Bearer " + *endpoint_.api_key);

    const std::string payload = body.dump();
    std::string last_error;
    auto backoff = retry_.initial_backoff;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(prefix + path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            fail("HTTP " + std::to_string(res->status) + " " + res->body);
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            fail(std::string("malformed JSON response: ") + e.what());
        }
    }
    fail(last_error + " after " + std::to_string(retry_.max_retries) + " retries");
}

} // namespace gw
