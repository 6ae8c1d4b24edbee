#include "gw/service.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

namespace gw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSnapshotFormat = "gw-index-snapshot/1";
constexpr const char* kSessionFormat = "gw-session/1";
constexpr const char* kNoSourcesAnswer = "No sources in this collection matched the question.";

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

bool safe_id(const std::string& id) {
    static const std::regex re("[A-Za-z0-9][A-Za-z0-9._-]{0,127}");
    return std::regex_match(id, re);
}

std::string session_name(std::size_t n) {
    std::string digits = std::to_string(n);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "s" + digits;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void append_line(const fs::path& path, const json& record) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::StoreWriteError, "cannot append to " + path.string());
}

json probes_json(const std::vector<ProbeInfo>& probes) {
    json out = json::array();
    for (const auto& p : probes) out.push_back({{"label", p.label}, {"weight", p.weight}});
    return out;
}

std::shared_ptr<JsonHttpClient> make_client(const ProviderEndpoint& p, const std::string& name, ErrorCode code,
                                            const ProviderConfig& providers, TranscriptStore* transcripts) {
    HttpEndpoint endpoint = p.endpoint;
    return std::make_shared<JsonHttpClient>(std::move(endpoint), name, code, providers.transcript_mode, transcripts);
}

} // namespace

struct Engine::SessionState {
    std::mutex mutex; // serializes asks of one conversation
    ChatSession session;
    fs::path log;
};

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void ServiceConfig::validate() const {
    retrieval.validate();
    if (token_budget < 64 || token_budget > 1'000'000) invalid("token_budget must be in [64, 1000000]");
    if (providers.embedding_dimension < 1 || providers.embedding_dimension > 65536) {
        invalid("embedding dimension must be in [1, 65536]");
    }
    if (data_dir.empty()) invalid("data_dir is empty");
    if (offline_mode) {
        if (providers.embedding) invalid("offline mode forbids an embedding endpoint");
        if (providers.llm) invalid("offline mode forbids an LLM endpoint");
        if (providers.terms) invalid("offline mode forbids a term extraction endpoint");
        if (providers.sparql && !providers.sparql->cache_only) {
            invalid("offline mode forbids a live SPARQL endpoint (use a cache-only configuration)");
        }
    }
    if (providers.transcript_mode != TranscriptMode::Live && !providers.transcript_dir) {
        invalid("transcript record/replay needs a transcript directory");
    }
}

json to_json(const ChatSession& s) {
    json turns = json::array();
    for (const auto& t : s.turns) {
        turns.push_back({{"turn", t.turn}, {"query", t.query}, {"timestamp", t.timestamp}, {"response", t.response}});
    }
    return {{"session_id", s.session_id},
            {"collection_id", s.collection_id},
            {"created_at", s.created_at},
            {"turns", turns}};
}

json to_json(const IndexReport& r) {
    return {{"collection_id", r.collection_id},
            {"fragments_indexed", r.fragments_indexed},
            {"fragments_skipped", r.fragments_skipped},
            {"terms", r.terms},
            {"linked_terms", r.linked_terms},
            {"extractor_id", r.extractor_id},
            {"embedding_provider", r.embedding_provider},
            {"kg_source", r.kg_source.empty() ? json(nullptr) : json(r.kg_source)},
            {"dimension", r.dimension}};
}

json to_json(const CollectionStatus& s) {
    return {{"collection_id", s.collection_id}, {"title", s.title},         {"documents", s.documents},
            {"fragments", s.fragments},         {"indexed", s.indexed},     {"indexing", s.indexing},
            {"index_size", s.index_size}};
}

Engine::Engine(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir / "collections") {
    config_.validate();
    const auto& p = config_.providers;
    if (p.transcript_dir) transcripts_ = std::make_unique<TranscriptStore>(*p.transcript_dir);

    if (!config_.offline_mode && p.embedding) {
        auto client = make_client(*p.embedding, "embedding:" + p.embedding->model_id, ErrorCode::ProviderUnavailable,
                                  p, transcripts_.get());
        embedder_ = std::make_unique<HttpEmbeddingProvider>(client, p.embedding->model_id, p.embedding_dimension);
    } else {
        auto stop = std::make_shared<std::unordered_set<std::string>>(english_stopwords());
        std::string tag = kStopwordListVersion;
        for (const auto& [lang, words] : config_.retrieval.extract.extra_stopwords) {
            for (const auto& w : words) stop->insert(text::fold(w));
            tag += "+" + lang;
        }
        embedder_ = std::make_unique<HashingEmbedder>(p.embedding_dimension, config_.hash_seed, std::move(stop), tag);
    }
    if (!config_.offline_mode && p.terms) {
        auto client =
            make_client(*p.terms, "terms:" + p.terms->model_id, ErrorCode::ExtractorUnavailable, p, transcripts_.get());
        extractor_ = std::make_unique<LlmTermExtractor>(client, p.terms->model_id);
    } else {
        extractor_ = std::make_unique<StatisticalTermExtractor>();
    }
    if (!config_.offline_mode && p.llm) {
        auto client = make_client(*p.llm, "llm:" + p.llm->model_id, ErrorCode::ProviderUnavailable, p, transcripts_.get());
        llm_ = std::make_unique<HttpLlmProvider>(client, p.llm->model_id, "/v1/chat", p.llm_requests_per_second);
    }
    if (p.kg_fixture) {
        kg_ = load_skos_fixture(*p.kg_fixture);
    } else if (p.sparql) {
        kg_ = std::make_shared<SparqlKgClient>(*p.sparql);
    }

    fs::create_directories(config_.data_dir / "collections");
    fs::create_directories(config_.data_dir / "sessions");
    load_persisted();
}

Engine::~Engine() = default;

std::string Engine::timestamp() const { return config_.clock ? config_.clock() : utc_now(); }

fs::path Engine::index_dir(const std::string& collection_id) const {
    return store_.collection_dir(collection_id) / "index";
}

void Engine::load_persisted() {
    store_.load_all();
    for (const auto& id : store_.collection_ids()) {
        fs::path dir = index_dir(id);
        if (!fs::exists(dir / "snapshot.json")) {
            // a swap interrupted between its two renames leaves the old snapshot here
            fs::path old = dir;
            old += ".old";
            if (!fs::exists(old / "snapshot.json")) continue;
            fs::remove_all(dir);
            fs::rename(old, dir);
        }
        json meta = json::parse(read_file(dir / "snapshot.json"));
        auto snap = std::make_shared<IndexSnapshot>();
        snap->collection = store_.get(id);
        snap->index = FlatIndex::load(dir / "index.bin");
        snap->term_count = meta.value("term_count", std::size_t{0});
        snapshots_[id] = std::move(snap);
    }

    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(config_.data_dir / "sessions")) {
        if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        auto state = std::make_shared<SessionState>();
        state->log = path;
        std::ifstream in(path);
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                break; // torn trailing append
            }
            if (j.value("record", "") == "session") {
                state->session.session_id = j.at("session_id").get<std::string>();
                state->session.collection_id = j.at("collection_id").get<std::string>();
                state->session.created_at = j.value("created_at", "");
                header = true;
            } else if (header && j.value("record", "") == "turn") {
                state->session.turns.push_back({j.at("turn").get<std::size_t>(), j.at("query").get<std::string>(),
                                                j.at("response"), j.value("timestamp", "")});
            }
        }
        if (!header) continue;
        const std::string stem = path.stem().string();
        if (stem.size() > 1 && stem[0] == 's' && std::all_of(stem.begin() + 1, stem.end(), ::isdigit)) {
            next_session_ = std::max(next_session_, static_cast<std::size_t>(std::stoull(stem.substr(1))) + 1);
        }
        sessions_[state->session.session_id] = std::move(state);
    }
}

IngestReport Engine::ingest(const CollectionManifest& manifest, const std::map<std::string, std::string>& bodies) {
    if (!safe_id(manifest.collection_id)) {
        invalid("collection_id '" + manifest.collection_id + "' must match [A-Za-z0-9][A-Za-z0-9._-]*");
    }
    {
        std::lock_guard lock(mutex_);
        if (indexing_.count(manifest.collection_id)) {
            throw Error(ErrorCode::Busy, "collection '" + manifest.collection_id + "' is being indexed");
        }
        indexing_.insert(manifest.collection_id);
    }
    struct Release {
        Engine* e;
        std::string id;
        ~Release() {
            std::lock_guard lock(e->mutex_);
            e->indexing_.erase(id);
        }
    } release{this, manifest.collection_id};

    IngestReport report = ingest_collection(manifest, bodies, store_);
    if (report.documents > 0) {
        {
            std::lock_guard lock(mutex_);
            snapshots_.erase(manifest.collection_id);
        }
        fs::remove_all(index_dir(manifest.collection_id));
    }
    return report;
}

IndexReport Engine::index(const std::string& collection_id) {
    auto collection = store_.get(collection_id);
    if (!collection) throw Error(ErrorCode::NotFound, "unknown collection '" + collection_id + "'");
    {
        std::lock_guard lock(mutex_);
        if (indexing_.count(collection_id)) {
            throw Error(ErrorCode::Busy, "collection '" + collection_id + "' is already being indexed");
        }
        indexing_.insert(collection_id);
    }
    struct Release {
        Engine* e;
        std::string id;
        ~Release() {
            std::lock_guard lock(e->mutex_);
            e->indexing_.erase(id);
        }
    } release{this, collection_id};
    // re-read under the writer role so a concurrent ingest cannot slip in between
    collection = store_.get(collection_id);

    IndexReport report;
    report.collection_id = collection_id;

    TermTable table = extract_terms(collection->fragments, *extractor_, config_.retrieval.extract, collection_id);
    report.terms = table.terms.size();
    report.extractor_id = table.extractor_id;

    std::vector<EnrichedTerm> enriched;
    if (kg_) {
        report.kg_source = kg_->source_id();
        LinkOptions link{config_.retrieval.languages};
        for (const auto& t : table.terms) enriched.push_back(link_term(t, *kg_, link));
        ExpandOptions expand{config_.retrieval.languages, config_.retrieval.expansion_depth,
                             config_.retrieval.hop_decay, config_.retrieval.max_related_labels};
        enriched = expand_terms(enriched, *kg_, expand);
        report.linked_terms = static_cast<std::size_t>(
            std::count_if(enriched.begin(), enriched.end(), [](const EnrichedTerm& e) { return e.linked_concept.has_value(); }));
    }

    const auto metas = collection->metas();
    std::vector<const Fragment*> embeddable;
    std::vector<std::string> texts;
    for (const auto& f : collection->fragments) {
        if (text::words(f.text).empty()) {
            ++report.fragments_skipped;
            continue;
        }
        embeddable.push_back(&f);
        texts.push_back(f.text);
    }
    if (embeddable.empty()) throw Error(ErrorCode::EmptyIndex, "collection '" + collection_id + "' has no embeddable text");
    auto vectors = embed_texts(texts, *embedder_, embedder_->dimension());

    std::vector<IndexEntry> entries;
    entries.reserve(embeddable.size());
    for (std::size_t i = 0; i < embeddable.size(); ++i) {
        const Fragment& f = *embeddable[i];
        entries.push_back({f.fragment_id, f.doc_id, std::move(vectors[i]), metas.at(f.doc_id).language});
    }
    auto index = std::make_shared<FlatIndex>(embedder_->dimension(), embedder_->id());
    index->upsert(entries);
    report.fragments_indexed = index->size();
    report.embedding_provider = embedder_->id();
    report.dimension = embedder_->dimension();

    const fs::path dir = index_dir(collection_id);
    fs::path building = dir;
    building += ".building";
    fs::path old = dir;
    old += ".old";
    fs::remove_all(building);
    fs::create_directories(building);
    index->save(building / "index.bin");
    {
        std::ostringstream terms;
        write_term_table(table, terms);
        write_file_atomic(building / "terms.jsonl", terms.str());
    }
    {
        std::string lines;
        for (const auto& e : enriched) lines += to_json(e).dump() + "\n";
        write_file_atomic(building / "enriched.jsonl", lines);
    }
    json meta = to_json(report);
    meta["format"] = kSnapshotFormat;
    meta["term_count"] = table.terms.size();
    write_file_atomic(building / "snapshot.json", meta.dump(2) + "\n");

    fs::remove_all(old);
    if (fs::exists(dir)) fs::rename(dir, old);
    fs::rename(building, dir);
    fs::remove_all(old);

    auto snap = std::make_shared<IndexSnapshot>();
    snap->collection = collection;
    snap->index = std::move(index);
    snap->term_count = table.terms.size();
    std::lock_guard lock(mutex_);
    snapshots_[collection_id] = std::move(snap);
    return report;
}

CollectionStatus Engine::collection(const std::string& collection_id) const {
    auto c = store_.get(collection_id);
    if (!c) throw Error(ErrorCode::NotFound, "unknown collection '" + collection_id + "'");
    CollectionStatus s;
    s.collection_id = collection_id;
    s.title = c->manifest.title;
    s.documents = c->manifest.documents.size();
    s.fragments = c->fragments.size();
    std::lock_guard lock(mutex_);
    s.indexing = indexing_.count(collection_id) > 0;
    if (auto it = snapshots_.find(collection_id); it != snapshots_.end()) {
        s.indexed = true;
        s.index_size = it->second->index->size();
    }
    return s;
}

std::vector<CollectionStatus> Engine::collections() const {
    std::vector<CollectionStatus> out;
    for (const auto& id : store_.collection_ids()) out.push_back(collection(id));
    return out;
}

std::shared_ptr<const IndexSnapshot> Engine::snapshot_for(const std::string& collection_id) const {
    if (!store_.get(collection_id)) throw Error(ErrorCode::NotFound, "unknown collection '" + collection_id + "'");
    std::lock_guard lock(mutex_);
    auto it = snapshots_.find(collection_id);
    if (it == snapshots_.end()) {
        if (indexing_.count(collection_id)) {
            throw Error(ErrorCode::Busy, "collection '" + collection_id + "' is being indexed");
        }
        throw Error(ErrorCode::NotIndexed, "collection '" + collection_id + "' is not indexed yet");
    }
    if (it->second->index->provider_id() != embedder_->id()) {
        throw Error(ErrorCode::NotIndexed, "collection '" + collection_id + "' was indexed with " +
                                               it->second->index->provider_id() + "; re-index for " + embedder_->id());
    }
    return it->second;
}

ChatSession Engine::create_session(const std::string& collection_id) {
    if (!store_.get(collection_id)) throw Error(ErrorCode::NotFound, "unknown collection '" + collection_id + "'");
    auto state = std::make_shared<SessionState>();
    std::lock_guard lock(mutex_);
    state->session.session_id = session_name(next_session_++);
    state->session.collection_id = collection_id;
    state->session.created_at = timestamp();
    state->log = config_.data_dir / "sessions" / (state->session.session_id + ".jsonl");
    write_file_atomic(state->log, json{{"record", "session"},
                                       {"format", kSessionFormat},
                                       {"session_id", state->session.session_id},
                                       {"collection_id", collection_id},
                                       {"created_at", state->session.created_at}}
                                          .dump() +
                                      "\n");
    sessions_[state->session.session_id] = state;
    return state->session;
}

std::shared_ptr<Engine::SessionState> Engine::session_state(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "unknown session '" + session_id + "'");
    return it->second;
}

ChatSession Engine::session(const std::string& session_id) const {
    auto state = session_state(session_id);
    std::lock_guard lock(state->mutex);
    return state->session;
}

RankedRetrieval Engine::retrieve(const std::string& collection_id, const std::string& query,
                                 const SessionContext* session) {
    if (text::is_blank(query)) throw Error(ErrorCode::EmptyQuery, "query is empty");
    auto snap = snapshot_for(collection_id);
    RetrievalDeps deps{*snap->collection, *snap->index, *extractor_, kg_.get(), *embedder_};
    return gw::retrieve(query, session, deps, config_.retrieval);
}

json Engine::ask(const std::string& session_id, const std::string& query) {
    auto state = session_state(session_id);
    std::lock_guard lock(state->mutex);
    if (text::is_blank(query)) throw Error(ErrorCode::EmptyQuery, "query is empty");

    SessionContext context;
    for (const auto& t : state->session.turns) context.prior_queries.push_back(t.query);
    RankedRetrieval ranked = retrieve(state->session.collection_id, query, &context);

    Answer answer;
    if (ranked.clusters.empty()) {
        answer.text = kNoSourcesAnswer;
        answer.model_id = llm_ ? llm_->model_id() : kExtractiveModelId;
        answer.offline = llm_ == nullptr;
    } else {
        ContextPack pack = pack_context(ranked, config_.token_budget);
        answer = synthesize(ranked.query, pack, llm_.get());
    }

    const std::size_t turn = state->session.turns.size() + 1;
    json response = to_json(answer);
    response["session_id"] = session_id;
    response["turn"] = turn;
    response["query"] = ranked.query;
    response["probes_used"] = probes_json(ranked.probes_used);

    ChatTurn record{turn, ranked.query, response, timestamp()};
    append_line(state->log, {{"record", "turn"},
                             {"turn", record.turn},
                             {"query", record.query},
                             {"timestamp", record.timestamp},
                             {"response", record.response}});
    state->session.turns.push_back(std::move(record));
    return response;
}

json Engine::health() const {
    json sizes = json::object();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, snap] : snapshots_) sizes[id] = snap->index->size();
    }
    return {{"status", "ok"},
            {"offline_mode", config_.offline_mode},
            {"index_sizes", sizes},
            {"providers",
             {{"embedding", embedder_->id()},
              {"terms", extractor_->id()},
              {"llm", llm_ ? llm_->model_id() : std::string(kExtractiveModelId)},
              {"kg", kg_ ? json(kg_->source_id()) : json(nullptr)}}}};
}

int http_status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::NotIndexed: return 409;
    case ErrorCode::Busy: return 503;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ExtractorUnavailable:
    case ErrorCode::KgUnavailable: return 502;
    case ErrorCode::MalformedManifest:
    case ErrorCode::DuplicateDocId:
    case ErrorCode::EmptyDocument:
    case ErrorCode::EmptyQuery:
    case ErrorCode::MalformedFixture:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyText:
    case ErrorCode::EmptyIndex:
    case ErrorCode::BudgetTooSmall:
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::UnknownDocId:
    case ErrorCode::StoreWriteError:
    case ErrorCode::Io: return 500;
    }
    return 500;
}

json error_body(const Error& e) {
    json body{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (!e.provider().empty()) body["provider"] = e.provider();
    return body;
}

} // namespace gw
