#include "gw/vector_index.hpp"

#include "gw/error.hpp"
#include "gw/fragment_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace gw {

static_assert(std::endian::native == std::endian::little, "index file format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'W', 'V', 'I'};
constexpr std::uint32_t kFormatVersion = 1;

struct Scored {
    double score;
    const std::string* fragment_id;
    std::size_t row;
};

bool ranks_before(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.fragment_id < *b.fragment_id;
}

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_str() {
        auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    void read_doubles(double* dst, std::size_t n) {
        need(n * sizeof(double));
        std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Io, "index file truncated");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

FlatIndex::FlatIndex(std::size_t dimension, std::string provider_id)
    : dimension_(dimension), provider_id_(std::move(provider_id)) {
    if (dimension_ == 0) throw Error(ErrorCode::InvalidArgument, "index dimension must be positive");
}

std::size_t FlatIndex::upsert(std::span<const IndexEntry> entries) {
    for (const auto& e : entries) {
        if (e.vector.dimension() != dimension_) {
            throw Error(ErrorCode::DimensionMismatch, "entry '" + e.fragment_id + "' has dimension " +
                                                          std::to_string(e.vector.dimension()) + ", index has " +
                                                          std::to_string(dimension_));
        }
        if (e.fragment_id.empty()) throw Error(ErrorCode::InvalidArgument, "entry without fragment_id");
    }
    std::unique_lock lock(mutex_);
    for (const auto& e : entries) {
        auto [it, inserted] = by_id_.try_emplace(e.fragment_id, rows_.size());
        if (inserted) {
            rows_.push_back({e.fragment_id, e.doc_id, e.language});
            data_.insert(data_.end(), e.vector.values.begin(), e.vector.values.end());
        } else {
            rows_[it->second] = {e.fragment_id, e.doc_id, e.language};
            std::copy(e.vector.values.begin(), e.vector.values.end(),
                      data_.begin() + static_cast<std::ptrdiff_t>(it->second * dimension_));
        }
    }
    return entries.size();
}

std::size_t FlatIndex::size() const {
    std::shared_lock lock(mutex_);
    return rows_.size();
}

void FlatIndex::check_query(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (query.dimension() != dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.dimension()) +
                                                      ", index has " + std::to_string(dimension_));
    }
    if (rows_.empty()) throw Error(ErrorCode::EmptyIndex, "index is empty");
}

double FlatIndex::score_row(std::size_t row, std::span<const double> query) const {
    const double* v = data_.data() + row * dimension_;
    double s = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) s += v[i] * query[i];
    return std::clamp(s, -1.0, 1.0);
}

std::vector<SearchResult> FlatIndex::search_locked(const EmbeddingVector& query, std::size_t k,
                                                   const SearchFilter& filter) const {
    std::vector<Scored> scored;
    scored.reserve(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (filter && !filter(rows_[r].doc_id, rows_[r].language)) continue;
        scored.push_back({score_row(r, query.values), &rows_[r].fragment_id, r});
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranks_before);
    std::vector<SearchResult> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Row& row = rows_[scored[i].row];
        out.push_back({row.fragment_id, row.doc_id, scored[i].score});
    }
    return out;
}

std::vector<SearchResult> FlatIndex::search(const EmbeddingVector& query, std::size_t k,
                                            const SearchFilter& filter) const {
    std::shared_lock lock(mutex_);
    check_query(query, k);
    return search_locked(query, k, filter);
}

MultiProbeResult FlatIndex::multi_probe_search(std::span<const WeightedProbe> probes, std::size_t k,
                                               const SearchFilter& filter) const {
    if (probes.empty()) throw Error(ErrorCode::InvalidArgument, "multi-probe search needs at least one probe");
    for (const auto& p : probes) {
        if (!(p.weight > 0.0 && p.weight <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "probe weight must be in (0, 1]");
        }
    }
    std::shared_lock lock(mutex_);
    for (const auto& p : probes) check_query(p.vector, k);

    std::set<std::size_t> pool;
    for (const auto& p : probes) {
        for (const auto& r : search_locked(p.vector, k, filter)) pool.insert(by_id_.at(r.fragment_id));
    }

    std::vector<Scored> scored;
    std::vector<std::size_t> best_probe;
    scored.reserve(pool.size());
    for (std::size_t row : pool) {
        double best = -2.0;
        std::size_t arg = 0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const double s = probes[p].weight * score_row(row, probes[p].vector.values);
            if (s > best) {
                best = s;
                arg = p;
            }
        }
        scored.push_back({best, &rows_[row].fragment_id, row});
        best_probe.push_back(arg);
    }
    // remember which probe won before sorting reorders the rows
    std::unordered_map<std::size_t, std::size_t> winner;
    for (std::size_t i = 0; i < scored.size(); ++i) winner[scored[i].row] = best_probe[i];

    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranks_before);

    MultiProbeResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const Row& row = rows_[scored[i].row];
        out.hits.push_back({{row.fragment_id, row.doc_id, scored[i].score}, winner[scored[i].row]});
    }
    for (std::size_t row : pool) out.candidates.push_back(rows_[row].fragment_id);
    std::sort(out.candidates.begin(), out.candidates.end());
    return out;
}

std::vector<IndexEntry> FlatIndex::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<std::size_t> order(rows_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rows_[a].fragment_id < rows_[b].fragment_id; });
    std::vector<IndexEntry> out;
    out.reserve(order.size());
    for (std::size_t r : order) {
        const double* v = data_.data() + r * dimension_;
        out.push_back({rows_[r].fragment_id, rows_[r].doc_id,
                       EmbeddingVector{std::vector<double>(v, v + dimension_), provider_id_}, rows_[r].language});
    }
    return out;
}

std::string FlatIndex::serialize() const {
    auto all = entries();
    std::string out;
    out.reserve(64 + all.size() * (dimension_ * sizeof(double) + 48));
    out.append(kMagic, 4);
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
    put<std::uint64_t>(out, all.size());
    put_str(out, provider_id_);
    for (const auto& e : all) {
        put_str(out, e.fragment_id);
        put_str(out, e.doc_id);
        put_str(out, e.language);
        out.append(reinterpret_cast<const char*>(e.vector.values.data()), dimension_ * sizeof(double));
    }
    return out;
}

std::unique_ptr<FlatIndex> FlatIndex::deserialize(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw Error(ErrorCode::Io, "not an index file");
    }
    Reader in(bytes.substr(4));
    if (in.get<std::uint32_t>() != kFormatVersion) throw Error(ErrorCode::Io, "unsupported index format version");
    const auto dimension = in.get<std::uint32_t>();
    const auto count = in.get<std::uint64_t>();
    auto index = std::make_unique<FlatIndex>(dimension, in.get_str());
    std::vector<IndexEntry> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.fragment_id = in.get_str();
        e.doc_id = in.get_str();
        e.language = in.get_str();
        e.vector.values.resize(dimension);
        e.vector.provider_id = index->provider_id_;
        in.read_doubles(e.vector.values.data(), dimension);
        entries.push_back(std::move(e));
    }
    if (!in.done()) throw Error(ErrorCode::Io, "trailing bytes in index file");
    index->upsert(entries);
    return index;
}

void FlatIndex::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

std::unique_ptr<FlatIndex> FlatIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

} // namespace gw
