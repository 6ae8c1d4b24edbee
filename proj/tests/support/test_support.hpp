#pragma once

#include "gw/corpus.hpp"
#include "gw/text.hpp"
#include "gw/embedding.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <map>

#include <unistd.h>

namespace gw::test {

inline std::filesystem::path source_dir() { return GW_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "fixtures"; }
inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_text(p)); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "gw") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim, const std::string& pid = "test") {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (double& x : v) x = n(rng);
    return make_unit_vector(std::move(v), pid);
}

// httplib server on a free loopback port, served from a background thread.
class MockServer {
public:
    MockServer() = default;
    ~MockServer() { stop(); }

    httplib::Server& server() { return server_; }

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("mock server cannot bind");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

inline std::map<std::string, std::string> fixture_bodies(const CollectionManifest& m) {
    std::map<std::string, std::string> out;
    for (const auto& d : m.documents) {
        out[d.doc_id] = read_text(fixtures_dir() / "mda-mini" / (d.doc_id + ".txt"));
    }
    return out;
}

} // namespace gw::test
