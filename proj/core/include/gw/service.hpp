#pragma once

#include "gw/embedding.hpp"
#include "gw/fragment_store.hpp"
#include "gw/kg.hpp"
#include "gw/retrieval.hpp"
#include "gw/sparql.hpp"
#include "gw/synthesis.hpp"
#include "gw/terms.hpp"
#include "gw/vector_index.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gw {

/// An external HTTP provider: endpoint plus the model it should run.
struct ProviderEndpoint {
    HttpEndpoint endpoint;
    std::string model_id;
};

struct ProviderConfig {
    std::optional<ProviderEndpoint> embedding;
    std::size_t embedding_dimension = 256;
    std::optional<ProviderEndpoint> llm;
    double llm_requests_per_second = 0.0; // 0 = unlimited
    std::optional<ProviderEndpoint> terms;
    std::optional<SparqlConfig> sparql;
    std::optional<std::filesystem::path> kg_fixture; // offline SKOS fixture
    /// Recorded provider exchanges; Replay never touches the network.
    std::optional<std::filesystem::path> transcript_dir;
    TranscriptMode transcript_mode = TranscriptMode::Live;
};

struct ServiceConfig {
    ProviderConfig providers;
    bool offline_mode = true;
    std::size_t token_budget = 3000;
    RetrievalConfig retrieval;
    std::uint64_t hash_seed = kDefaultHashSeed;
    std::filesystem::path data_dir = "gw-data";
    /// Returns the timestamp recorded with each turn; defaults to UTC now.
    std::function<std::string()> clock;

    /// Throws InvalidArgument for out-of-range parameters, or when offline mode
    /// is combined with any network endpoint.
    void validate() const;
};

std::string utc_now();

struct ChatTurn {
    std::size_t turn = 0; // 1-based
    std::string query;
    nlohmann::json response; // the ask response body
    std::string timestamp;
};

struct ChatSession {
    std::string session_id;
    std::string collection_id;
    std::string created_at;
    std::vector<ChatTurn> turns;
};

nlohmann::json to_json(const ChatSession& s);

struct IndexReport {
    std::string collection_id;
    std::size_t fragments_indexed = 0;
    std::size_t fragments_skipped = 0; // no embeddable words
    std::size_t terms = 0;
    std::size_t linked_terms = 0;
    std::string extractor_id;
    std::string embedding_provider;
    std::string kg_source; // empty when no KG is configured
    std::size_t dimension = 0;
};

nlohmann::json to_json(const IndexReport& r);

struct CollectionStatus {
    std::string collection_id;
    std::string title;
    std::size_t documents = 0;
    std::size_t fragments = 0;
    bool indexed = false;
    bool indexing = false;
    std::size_t index_size = 0;
};

nlohmann::json to_json(const CollectionStatus& s);

/// Everything an ask needs from one indexing run. Immutable once published.
struct IndexSnapshot {
    std::shared_ptr<const StoredCollection> collection;
    std::shared_ptr<const FlatIndex> index;
    std::size_t term_count = 0;
};

/// The chat engine behind the CLI and the HTTP API.
///
/// Layout under data_dir:
///   collections/<id>/fragments.jsonl   fragment store
///   collections/<id>/index/            index.bin, terms.jsonl, enriched.jsonl, snapshot.json
///   sessions/<session_id>.jsonl        append-only turn log
///
/// A re-index builds `index.building/` and swaps it in by rename; asks hold the
/// snapshot they started with, so none observes a half-built index.
class Engine {
public:
    explicit Engine(ServiceConfig config);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const ServiceConfig& config() const { return config_; }

    /// Replaces the collection's fragments and drops its index (re-index required).
    IngestReport ingest(const CollectionManifest& manifest, const std::map<std::string, std::string>& bodies);

    IndexReport index(const std::string& collection_id);

    std::vector<CollectionStatus> collections() const;
    CollectionStatus collection(const std::string& collection_id) const;

    ChatSession create_session(const std::string& collection_id);
    ChatSession session(const std::string& session_id) const;

    /// Runs the query path and appends a turn. Returns
    /// {session_id, turn, query, answer_text, citations, probes_used, model_id, offline}.
    nlohmann::json ask(const std::string& session_id, const std::string& query);

    /// Retrieval only, without touching any session.
    RankedRetrieval retrieve(const std::string& collection_id, const std::string& query,
                             const SessionContext* session = nullptr);

    nlohmann::json health() const;

    std::filesystem::path index_dir(const std::string& collection_id) const;

private:
    struct SessionState;

    std::shared_ptr<const IndexSnapshot> snapshot_for(const std::string& collection_id) const;
    std::shared_ptr<SessionState> session_state(const std::string& session_id) const;
    void load_persisted();
    std::string timestamp() const;

    ServiceConfig config_;
    std::unique_ptr<TranscriptStore> transcripts_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    std::unique_ptr<TermExtractor> extractor_;
    std::shared_ptr<KgClient> kg_;
    std::unique_ptr<LlmProvider> llm_;
    FragmentStore store_;

    mutable std::mutex mutex_; // guards the maps below
    std::map<std::string, std::shared_ptr<const IndexSnapshot>> snapshots_;
    std::set<std::string> indexing_;
    std::map<std::string, std::shared_ptr<SessionState>> sessions_;
    std::size_t next_session_ = 1;
};

/// HTTP status for an engine error: 400, 404, 409, 502, 503 or 500.
int http_status_for(ErrorCode code);

/// {"error": code, "message": ..., "provider"?: ...}
nlohmann::json error_body(const Error& e);

} // namespace gw
