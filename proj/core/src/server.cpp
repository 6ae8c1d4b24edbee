#include "gw/server.hpp"

#include "gw/error.hpp"

#include <httplib.h>

namespace gw {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    try {
        json body = json::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return body;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

std::string string_field(const json& body, const char* name) {
    auto it = body.find(name);
    if (it == body.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + name + "' must be a string");
    }
    return it->get<std::string>();
}

// Runs a handler, translating engine errors into JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send(res, http_status_for(e.code()), error_body(e));
        } catch (const json::exception& e) {
            send(res, 400, {{"error", "InvalidArgument"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            send(res, 500, {{"error", "Internal"}, {"message", e.what()}});
        }
    };
}

} // namespace

struct ApiServer::Impl {
    Engine& engine;
    httplib::Server server;

    explicit Impl(Engine& e) : engine(e) {}
};

ApiServer::ApiServer(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
    auto& srv = impl_->server;
    Engine& eng = engine;

    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/v1/healthz", guarded([&eng](const httplib::Request&, httplib::Response& res) {
        send(res, 200, eng.health());
    }));

    srv.Get("/v1/collections", guarded([&eng](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& c : eng.collections()) list.push_back(to_json(c));
        send(res, 200, {{"collections", list}});
    }));

    srv.Post("/v1/collections", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        json body = parse_body(req);
        if (!body.contains("manifest")) throw Error(ErrorCode::MalformedManifest, "missing field 'manifest'");
        CollectionManifest manifest = parse_manifest(body["manifest"].dump());
        std::map<std::string, std::string> bodies;
        if (body.contains("bodies")) bodies = body["bodies"].get<std::map<std::string, std::string>>();
        IngestReport report = eng.ingest(manifest, bodies);
        if (report.documents == 0) {
            Error e(ErrorCode::EmptyDocument, "no document of '" + manifest.collection_id + "' could be ingested");
            json err = error_body(e);
            err["report"] = to_json(report);
            send(res, 400, err);
            return;
        }
        send(res, 201, to_json(report));
    }));

    srv.Get(R"(/v1/collections/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, to_json(eng.collection(req.matches[1])));
    }));

    srv.Post(R"(/v1/collections/([^/]+)/index)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, to_json(eng.index(req.matches[1])));
    }));

    srv.Post("/v1/sessions", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        json body = parse_body(req);
        ChatSession s = eng.create_session(string_field(body, "collection_id"));
        send(res, 201, {{"session_id", s.session_id}, {"collection_id", s.collection_id}});
    }));

    srv.Get(R"(/v1/sessions/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, to_json(eng.session(req.matches[1])));
    }));

    srv.Post(R"(/v1/sessions/([^/]+)/ask)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        eng.session(id); // unknown session wins over a malformed body
        json body = parse_body(req);
        send(res, 200, eng.ask(id, string_field(body, "query")));
    }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

} // namespace gw
