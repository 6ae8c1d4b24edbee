#include "gw/embedding.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gw {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t seeded_hash64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed,
                                 std::shared_ptr<const std::unordered_set<std::string>> stopwords, std::string stop_tag)
    : dimension_(dimension), seed_(seed), stopwords_(std::move(stopwords)), stop_tag_(std::move(stop_tag)) {
    if (dimension_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::string HashingEmbedder::id() const {
    std::ostringstream s;
    s << "hashing-fnv1a/1 d=" << dimension_ << " seed=" << std::hex << seed_;
    if (stopwords_) s << " stop=" << (stop_tag_.empty() ? "custom" : stop_tag_);
    return s.str();
}

std::vector<std::vector<double>> HashingEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        std::vector<double> v(dimension_, 0.0);
        auto tokens = text::words(t);
        if (stopwords_) {
            std::vector<std::string> kept;
            for (auto& token : tokens) {
                if (!stopwords_->count(token)) kept.push_back(std::move(token));
            }
            if (!kept.empty()) tokens = std::move(kept);
            else tokens = text::words(t);
        }
        for (const auto& token : tokens) {
            const std::size_t bucket = seeded_hash64(token, seed_) % dimension_;
            const double sign = (seeded_hash64(token, seed_ ^ kSignSeedSalt) & 1U) ? 1.0 : -1.0;
            v[bucket] += sign;
        }
        out.push_back(std::move(v));
    }
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::shared_ptr<JsonHttpClient> client, std::string model_id,
                                             std::size_t dimension, std::size_t batch_size, std::string path)
    : client_(std::move(client)), model_id_(std::move(model_id)), dimension_(dimension),
      batch_size_(std::max<std::size_t>(1, batch_size)), path_(std::move(path)) {}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    nlohmann::json request{{"model_id", model_id_}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    nlohmann::json response = client_->post(path_, request);
    try {
        const auto dim = response.at("dimension").get<std::size_t>();
        if (dim != dimension_) {
            throw Error(ErrorCode::DimensionMismatch, "provider " + model_id_ + " returned dimension " +
                                                          std::to_string(dim) + ", expected " + std::to_string(dimension_));
        }
        auto vectors = response.at("vectors").get<std::vector<std::vector<double>>>();
        if (vectors.size() != texts.size()) {
            throw Error(ErrorCode::ProviderUnavailable, "provider " + model_id_ + " returned " +
                                                            std::to_string(vectors.size()) + " vectors for " +
                                                            std::to_string(texts.size()) + " texts",
                        client_->provider_name());
        }
        return vectors;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, "provider " + model_id_ + ": malformed response: " + e.what(),
                    client_->provider_name());
    }
}

EmbeddingVector make_unit_vector(std::vector<double> values, std::string provider_id) {
    double norm_sq = 0.0;
    for (double x : values) {
        if (!std::isfinite(x)) throw Error(ErrorCode::ProviderUnavailable, provider_id + ": non-finite component");
        norm_sq += x * x;
    }
    if (norm_sq == 0.0) throw Error(ErrorCode::EmptyText, "text produced a zero vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : values) x *= inv;
    return EmbeddingVector{std::move(values), std::move(provider_id)};
}

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider,
                                         std::size_t dimension) {
    if (dimension != 0 && provider.dimension() != dimension) {
        throw Error(ErrorCode::DimensionMismatch, provider.id() + " declares dimension " +
                                                      std::to_string(provider.dimension()) + ", configured " +
                                                      std::to_string(dimension));
    }
    for (const auto& t : texts) {
        if (text::is_blank(t)) throw Error(ErrorCode::EmptyText, "cannot embed an empty text");
    }
    const std::size_t batch = std::max<std::size_t>(1, provider.max_batch());
    const std::string pid = provider.id();
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
        auto chunk = texts.subspan(begin, std::min(batch, texts.size() - begin));
        auto raw = provider.embed_batch(chunk);
        if (raw.size() != chunk.size()) {
            throw Error(ErrorCode::ProviderUnavailable, pid + ": batch size mismatch");
        }
        for (auto& v : raw) {
            if (v.size() != provider.dimension()) {
                throw Error(ErrorCode::DimensionMismatch, pid + ": vector of dimension " + std::to_string(v.size()));
            }
            out.push_back(make_unit_vector(std::move(v), pid));
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return std::clamp(dot(a.values, b.values), -1.0, 1.0);
}

double cosine_unnormalized(std::span<const double> a, std::span<const double> b) {
    const double ab = dot(a, b);
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::EmptyText, "cosine of a zero vector");
    return std::clamp(ab / (na * nb), -1.0, 1.0);
}

} // namespace gw
