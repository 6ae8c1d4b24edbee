#pragma once

#include "gw/embedding.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gw {

struct IndexEntry {
    std::string fragment_id;
    std::string doc_id;
    EmbeddingVector vector;
    std::string language = "en";
};

/// Sorted by (score desc, fragment_id asc).
struct SearchResult {
    std::string fragment_id;
    std::string doc_id;
    double score = 0.0;

    bool operator==(const SearchResult&) const = default;
};

/// Optional metadata predicate; entries for which it returns false are skipped.
using SearchFilter = std::function<bool(std::string_view doc_id, std::string_view language)>;

struct WeightedProbe {
    EmbeddingVector vector;
    double weight = 1.0; // (0, 1]
};

struct ProbeHit {
    SearchResult result;      // score = max over probes of weight * cosine
    std::size_t best_probe = 0; // lowest probe index attaining the max
};

struct MultiProbeResult {
    std::vector<ProbeHit> hits;          // top-k of the candidate pool
    std::vector<std::string> candidates; // union of per-probe top-k, sorted ascending
};

/// Exact (full-scan) cosine index. Searches run concurrently under a shared
/// lock; upsert() validates the whole batch and applies it under an exclusive
/// lock, so no search sees a partial batch.
class FlatIndex {
public:
    FlatIndex(std::size_t dimension, std::string provider_id);

    FlatIndex(const FlatIndex&) = delete;
    FlatIndex& operator=(const FlatIndex&) = delete;

    /// Inserts or replaces by fragment_id; returns the number of entries written.
    std::size_t upsert(std::span<const IndexEntry> entries);

    std::vector<SearchResult> search(const EmbeddingVector& query, std::size_t k,
                                     const SearchFilter& filter = {}) const;

    /// Candidate pool = union of each probe's top-k; each candidate is scored
    /// max_p(weight_p * cosine_p) over all probes, and the top-k of the pool
    /// is returned.
    MultiProbeResult multi_probe_search(std::span<const WeightedProbe> probes, std::size_t k,
                                        const SearchFilter& filter = {}) const;

    std::size_t size() const;
    std::size_t dimension() const { return dimension_; }
    const std::string& provider_id() const { return provider_id_; }

    /// Entries in fragment_id order (a copy).
    std::vector<IndexEntry> entries() const;

    /// Binary format, little-endian:
    ///   "GWVI" u32 version=1 u32 dimension u64 count str provider_id
    ///   then per entry (fragment_id order): str fragment_id, str doc_id,
    ///   str language, f64[dimension]; where str = u32 length + UTF-8 bytes.
    std::string serialize() const;
    static std::unique_ptr<FlatIndex> deserialize(std::string_view bytes);

    void save(const std::filesystem::path& path) const;
    static std::unique_ptr<FlatIndex> load(const std::filesystem::path& path);

private:
    struct Row {
        std::string fragment_id;
        std::string doc_id;
        std::string language;
    };

    void check_query(const EmbeddingVector& query, std::size_t k) const;
    std::vector<SearchResult> search_locked(const EmbeddingVector& query, std::size_t k,
                                            const SearchFilter& filter) const;
    double score_row(std::size_t row, std::span<const double> query) const;

    std::size_t dimension_;
    std::string provider_id_;
    mutable std::shared_mutex mutex_;
    std::vector<Row> rows_;
    std::vector<double> data_; // rows_.size() * dimension_
    std::unordered_map<std::string, std::size_t> by_id_;
};

} // namespace gw
