#pragma once

#include "gw/corpus.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace gw {

/// One ingested collection: the manifest restricted to ingested documents and
/// all fragments ordered by (manifest order, ordinal).
struct StoredCollection {
    CollectionManifest manifest;
    std::vector<Fragment> fragments;

    bool operator==(const StoredCollection&) const = default;

    std::map<std::string, DocumentMeta> metas() const;
};

struct IngestFailure {
    std::string doc_id;
    std::string reason;
};

struct IngestReport {
    std::string collection_id;
    std::size_t documents = 0;
    std::size_t fragments = 0;
    std::vector<IngestFailure> skipped;
};

nlohmann::json to_json(const IngestReport& report);

/// Fragment store keyed by collection id. Readers receive immutable snapshots;
/// put() replaces a collection wholesale, so re-ingestion never duplicates.
/// With a root directory every put() is persisted to
/// `<root>/<collection_id>/fragments.jsonl` via write-then-rename.
class FragmentStore {
public:
    FragmentStore() = default;
    explicit FragmentStore(std::filesystem::path root);

    void put(StoredCollection collection);
    std::shared_ptr<const StoredCollection> get(const std::string& collection_id) const;
    std::vector<std::string> collection_ids() const;

    /// Reads every persisted collection under the root.
    void load_all();

    const std::optional<std::filesystem::path>& root() const { return root_; }
    std::filesystem::path collection_dir(const std::string& collection_id) const;

    /// JSON-lines encoding: a header record followed by one record per fragment.
    static void write_jsonl(const StoredCollection& collection, std::ostream& out);
    static StoredCollection read_jsonl(std::istream& in);

    static void save_file(const StoredCollection& collection, const std::filesystem::path& path);
    static StoredCollection load_file(const std::filesystem::path& path);

private:
    std::optional<std::filesystem::path> root_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const StoredCollection>> collections_;
};

/// Splits every document and stores the result. Documents without a body or
/// with an empty body are reported in `skipped`; the rest of the batch proceeds.
IngestReport ingest_collection(const CollectionManifest& manifest,
                               const std::map<std::string, std::string>& doc_bodies,
                               FragmentStore& store, const SplitPolicy& policy = {});

/// Converts a non-text source file (e.g. a PDF) into plain text. Returns
/// nullopt when the file cannot be converted.
using BodyExtractor = std::function<std::optional<std::string>(const std::filesystem::path&)>;

/// Runs `command <file>` and captures stdout, e.g. `pdftotext -layout` with a
/// trailing `-` handled by the caller's wrapper script.
BodyExtractor external_command_extractor(std::string command);

/// Reads `<dir>/<doc_id>.txt` for each manifest entry. When the text file is
/// missing and an extractor is supplied, the first other `<doc_id>.*` file is
/// handed to it. Missing bodies are simply absent from the result.
std::map<std::string, std::string> read_bodies(const std::filesystem::path& dir,
                                               const CollectionManifest& manifest,
                                               const BodyExtractor& extractor = {});

/// Atomically replaces `path` with `contents` (write to sibling temp, rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace gw
