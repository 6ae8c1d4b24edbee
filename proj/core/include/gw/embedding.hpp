#pragma once

#include "gw/http_json.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace gw {

/// Unit-norm embedding. Every vector produced by embed_texts() or
/// make_unit_vector() satisfies |norm - 1| <= 1e-6.
struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::size_t max_batch() const { return 64; }

    /// Raw (not necessarily normalized) vectors, one per input text.
    virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) = 0;
};

/// 64-bit FNV-1a over the bytes, with the offset basis perturbed by the seed
/// and the result passed through the splitmix64 finalizer.
std::uint64_t seeded_hash64(std::string_view bytes, std::uint64_t seed);

inline constexpr std::uint64_t kDefaultHashSeed = 0x5eed5eed5eed5eedULL;
inline constexpr std::uint64_t kSignSeedSalt = 0x9e3779b97f4a7c15ULL;

/// Feature-hashing embedder: each token t adds sign(t) to bucket(t), where
/// bucket(t) = seeded_hash64(t, seed) mod D and sign(t) = +1 if
/// seeded_hash64(t, seed ^ kSignSeedSalt) is odd, else -1. The count vector is
/// L2-normalized. Deterministic and order-insensitive; not semantic.
///
/// With a stopword set, listed tokens are skipped unless the text holds
/// nothing else. `stop_tag` names the set in id().
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t seed = kDefaultHashSeed,
                             std::shared_ptr<const std::unordered_set<std::string>> stopwords = nullptr,
                             std::string stop_tag = {});

    std::string id() const override;
    std::size_t dimension() const override { return dimension_; }
    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::shared_ptr<const std::unordered_set<std::string>> stopwords_;
    std::string stop_tag_;
};

/// Remote embedder speaking
///   POST <path> {"model_id": m, "texts": [...]} -> {"dimension": D, "vectors": [[...], ...]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::shared_ptr<JsonHttpClient> client, std::string model_id, std::size_t dimension,
                          std::size_t batch_size = 64, std::string path = "/v1/embeddings");

    std::string id() const override { return "http:" + model_id_; }
    std::size_t dimension() const override { return dimension_; }
    std::size_t max_batch() const override { return batch_size_; }
    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;

private:
    std::shared_ptr<JsonHttpClient> client_;
    std::string model_id_;
    std::size_t dimension_;
    std::size_t batch_size_;
    std::string path_;
};

/// Normalizes `values`; throws EmptyText for a zero vector and
/// ProviderUnavailable for non-finite components.
EmbeddingVector make_unit_vector(std::vector<double> values, std::string provider_id);

/// Embeds in provider-sized batches, preserving input order. `dimension` of 0
/// accepts the provider's declared dimension.
std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider,
                                         std::size_t dimension = 0);

double dot(std::span<const double> a, std::span<const double> b);

/// Cosine of two stored (unit) vectors, i.e. their dot product clamped to [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// dot(a, b) / (|a| |b|) without assuming unit norm.
double cosine_unnormalized(std::span<const double> a, std::span<const double> b);

} // namespace gw
