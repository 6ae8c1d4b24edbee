#pragma once

#include "gw/service.hpp"

#include <memory>
#include <string>

namespace gw {

/// The /v1 JSON API over an Engine.
///
///   GET  /v1/healthz
///   GET  /v1/collections
///   POST /v1/collections                {manifest, bodies: {doc_id: text}}
///   GET  /v1/collections/{id}
///   POST /v1/collections/{id}/index
///   POST /v1/sessions                   {collection_id}
///   GET  /v1/sessions/{id}
///   POST /v1/sessions/{id}/ask          {query}
///
/// Errors are {"error", "message", "provider"?} with status 400, 404, 409,
/// 502 or 503.
class ApiServer {
public:
    explicit ApiServer(Engine& engine);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds to host:port (port 0 picks a free port) and returns the port.
    int bind(const std::string& host, int port);

    /// Serves until stop(); call after bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace gw
