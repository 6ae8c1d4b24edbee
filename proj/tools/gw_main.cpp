#include "gw/error.hpp"
#include "gw/server.hpp"
#include "gw/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;

struct Flags {
    std::string data_dir = "gw-data";
    bool offline = false;
    std::size_t token_budget = 3000;
    std::size_t k = 20;
    double alpha = 0.7;
    double decay = 0.5;
    double score_floor = 0.05;
    std::size_t max_probes = 8;
    int expansion_depth = 1;
    std::vector<std::string> languages;
    std::string kg_fixture;
    std::string sparql_endpoint;
    std::string sparql_cache;
    bool sparql_cache_only = false;
    std::string embedding_url;
    std::string embedding_model = "text-embedding";
    std::size_t embedding_dim = 256;
    std::string llm_url;
    std::string llm_model = "chat";
    double llm_rps = 0.0;
    std::string terms_url;
    std::string terms_model = "terms";
    std::string transcripts;
    std::string transcript_mode = "live";
};

void add_config_flags(CLI::App& app, Flags& f) {
    app.add_option("--data-dir", f.data_dir, "Directory holding collections, indexes and sessions");
    app.add_flag("--offline", f.offline, "Use the built-in providers only; endpoint flags are ignored");
    app.add_option("--token-budget", f.token_budget, "Context token budget per answer")->check(CLI::Range(64, 1000000));
    app.add_option("-k,--top-k", f.k, "Fragments retrieved per query")->check(CLI::Range(1, 10000));
    app.add_option("--alpha", f.alpha, "Weight of the best fragment in the document score")->check(CLI::Range(0.0, 1.0));
    app.add_option("--decay", f.decay, "Per-turn decay of prior-turn probes")->check(CLI::Range(0.0, 1.0));
    app.add_option("--score-floor", f.score_floor, "Drop hits scoring below this")->check(CLI::Range(-1.0, 1.0));
    app.add_option("--max-probes", f.max_probes, "Maximum probes per query")->check(CLI::Range(1, 64));
    app.add_option("--expansion-depth", f.expansion_depth, "KG hops used for expansion")->check(CLI::Range(0, 2));
    app.add_option("--languages", f.languages, "Expansion languages (default: all)")->delimiter(',');
    app.add_option("--kg-fixture", f.kg_fixture, "SKOS fixture file used as the knowledge graph");
    app.add_option("--sparql-endpoint", f.sparql_endpoint, "SPARQL endpoint URL (token from GW_SPARQL_TOKEN)");
    app.add_option("--sparql-cache", f.sparql_cache, "JSON-lines cache of SPARQL responses");
    app.add_flag("--sparql-cache-only", f.sparql_cache_only, "Answer KG lookups from the cache only");
    app.add_option("--embedding-url", f.embedding_url, "Embedding provider base URL (key from GW_EMBEDDING_API_KEY)");
    app.add_option("--embedding-model", f.embedding_model, "Embedding model id");
    app.add_option("--embedding-dim", f.embedding_dim, "Embedding dimension")->check(CLI::Range(1, 65536));
    app.add_option("--llm-url", f.llm_url, "LLM provider base URL (key from GW_LLM_API_KEY)");
    app.add_option("--llm-model", f.llm_model, "LLM model id");
    app.add_option("--llm-rps", f.llm_rps, "LLM request rate limit (0 = unlimited)");
    app.add_option("--terms-url", f.terms_url, "Term extraction provider base URL (key from GW_TERMS_API_KEY)");
    app.add_option("--terms-model", f.terms_model, "Term extraction model id");
    app.add_option("--transcripts", f.transcripts, "Directory of recorded provider exchanges");
    app.add_option("--transcript-mode", f.transcript_mode, "live, record or replay")
        ->check(CLI::IsMember({"live", "record", "replay"}));
}

gw::ServiceConfig make_config(const Flags& f) {
    gw::ServiceConfig c;
    c.data_dir = f.data_dir;
    c.token_budget = f.token_budget;
    c.retrieval.k = f.k;
    c.retrieval.alpha = f.alpha;
    c.retrieval.session_decay = f.decay;
    c.retrieval.score_floor = f.score_floor;
    c.retrieval.max_probes = f.max_probes;
    c.retrieval.expansion_depth = f.expansion_depth;
    c.retrieval.languages = f.languages;
    c.providers.embedding_dimension = f.embedding_dim;
    if (!f.kg_fixture.empty()) c.providers.kg_fixture = f.kg_fixture;
    if (!f.transcripts.empty()) c.providers.transcript_dir = f.transcripts;
    if (f.transcript_mode == "record") c.providers.transcript_mode = gw::TranscriptMode::Record;
    if (f.transcript_mode == "replay") c.providers.transcript_mode = gw::TranscriptMode::Replay;

    auto endpoint = [](const std::string& url, const std::string& model, const char* key_var) {
        return gw::ProviderEndpoint{gw::HttpEndpoint{url, gw::api_key_from_env(key_var)}, model};
    };
    const bool any_network = !f.embedding_url.empty() || !f.llm_url.empty() || !f.terms_url.empty() ||
                             (!f.sparql_endpoint.empty() && !f.sparql_cache_only);
    c.offline_mode = f.offline || !any_network;
    if (f.offline && any_network) std::cerr << "gw: --offline given; ignoring provider endpoints\n";
    if (!c.offline_mode) {
        if (!f.embedding_url.empty()) c.providers.embedding = endpoint(f.embedding_url, f.embedding_model, "GW_EMBEDDING_API_KEY");
        if (!f.llm_url.empty()) c.providers.llm = endpoint(f.llm_url, f.llm_model, "GW_LLM_API_KEY");
        if (!f.terms_url.empty()) c.providers.terms = endpoint(f.terms_url, f.terms_model, "GW_TERMS_API_KEY");
        c.providers.llm_requests_per_second = f.llm_rps;
    }
    if (!f.sparql_endpoint.empty() && (!c.offline_mode || f.sparql_cache_only)) {
        gw::SparqlConfig s;
        s.endpoint = f.sparql_endpoint;
        s.auth_token = gw::api_key_from_env("GW_SPARQL_TOKEN");
        if (!f.sparql_cache.empty()) s.cache_file = f.sparql_cache;
        s.cache_only = f.sparql_cache_only;
        c.providers.sparql = s;
    }
    return c;
}

void print_answer(const json& r) {
    std::cout << r.at("answer_text").get<std::string>() << "\n";
    const auto& citations = r.at("citations");
    if (!citations.empty()) std::cout << "\nSources:\n";
    for (std::size_t i = 0; i < citations.size(); ++i) {
        const auto& c = citations[i];
        std::cout << "  [" << (i + 1) << "] " << c.at("title").get<std::string>();
        if (!c.at("date").is_null()) std::cout << " (" << c["date"].get<std::string>() << ")";
        char conf[16];
        std::snprintf(conf, sizeof conf, "%.2f", c.at("confidence").get<double>());
        std::cout << "  confidence " << conf << "\n";
    }
}

gw::ApiServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gw: retrieval-augmented chat over local document collections"};
    app.require_subcommand(1);
    Flags flags;
    add_config_flags(app, flags);

    auto* ingest = app.add_subcommand("ingest", "Split a collection into fragments and store it");
    std::string manifest_path;
    std::string bodies_dir;
    std::string extractor_cmd;
    ingest->add_option("manifest", manifest_path, "Collection manifest (JSON)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--bodies", bodies_dir, "Directory of <doc_id>.txt bodies (default: <manifest stem>/)");
    ingest->add_option("--extract-cmd", extractor_cmd, "Command converting non-text sources to text on stdout");

    auto* index = app.add_subcommand("index", "Build the retrieval index of a collection");
    std::string collection_id;
    index->add_option("collection", collection_id, "Collection id")->required();

    auto* ask = app.add_subcommand("ask", "Ask one question and print the answer");
    std::string query;
    std::string session_id;
    bool as_json = false;
    ask->add_option("collection", collection_id, "Collection id")->required();
    ask->add_option("query", query, "Question")->required();
    ask->add_option("--session", session_id, "Continue an existing session");
    ask->add_flag("--json", as_json, "Print the full response JSON");

    auto* chat = app.add_subcommand("chat", "Interactive session; one question per line");
    chat->add_option("collection", collection_id, "Collection id")->required();
    chat->add_option("--session", session_id, "Continue an existing session");

    auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--port", port, "Listen port (0 = any)")->check(CLI::Range(0, 65535));

    auto* export_manifest = app.add_subcommand("export-manifest", "Print the stored manifest of a collection");
    std::string out_path;
    export_manifest->add_option("collection", collection_id, "Collection id")->required();
    export_manifest->add_option("-o,--out", out_path, "Write to a file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        gw::Engine engine(make_config(flags));

        if (*ingest) {
            auto manifest = gw::load_manifest(manifest_path);
            std::filesystem::path dir = bodies_dir;
            if (dir.empty()) {
                std::filesystem::path m(manifest_path);
                dir = m.parent_path() / m.stem();
            }
            gw::BodyExtractor extractor;
            if (!extractor_cmd.empty()) extractor = gw::external_command_extractor(extractor_cmd);
            auto report = engine.ingest(manifest, gw::read_bodies(dir, manifest, extractor));
            std::cout << gw::to_json(report).dump(2) << "\n";
            return report.documents > 0 ? 0 : 1;
        }
        if (*index) {
            std::cout << gw::to_json(engine.index(collection_id)).dump(2) << "\n";
            return 0;
        }
        if (*ask) {
            if (session_id.empty()) session_id = engine.create_session(collection_id).session_id;
            json r = engine.ask(session_id, query);
            if (as_json) std::cout << r.dump(2) << "\n";
            else print_answer(r);
            return 0;
        }
        if (*chat) {
            if (session_id.empty()) session_id = engine.create_session(collection_id).session_id;
            std::cerr << "session " << session_id << " (empty line or EOF to quit)\n";
            std::string line;
            while (std::cerr << "> " && std::getline(std::cin, line) && !line.empty()) {
                try {
                    print_answer(engine.ask(session_id, line));
                } catch (const gw::Error& e) {
                    if (e.code() != gw::ErrorCode::EmptyQuery) throw;
                    std::cerr << e.what() << "\n";
                }
                std::cout << std::endl;
            }
            return 0;
        }
        if (*serve) {
            gw::ApiServer server(engine);
            int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on http://" << host << ":" << bound << "/v1\n";
            server.run();
            g_server = nullptr;
            return 0;
        }
        if (*export_manifest) {
            gw::FragmentStore store(std::filesystem::path(flags.data_dir) / "collections");
            store.load_all();
            auto stored = store.get(collection_id);
            if (!stored) throw gw::Error(gw::ErrorCode::NotFound, "unknown collection '" + collection_id + "'");
            const std::string text = gw::manifest_to_json(stored->manifest).dump(2) + "\n";
            if (out_path.empty()) {
                std::cout << text;
            } else {
                gw::write_file_atomic(out_path, text);
            }
            return 0;
        }
    } catch (const gw::Error& e) {
        std::cerr << "gw: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gw: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
