#include "gw/server.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

using namespace gw;
using nlohmann::json;

namespace {

class ApiTest : public ::testing::Test {
protected:
    void SetUp() override {
        ServiceConfig c;
        c.data_dir = dir_.path();
        c.providers.kg_fixture = test::fixtures_dir() / "kos-mini.ttl-json";
        c.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
        engine_ = std::make_unique<Engine>(c);
        server_ = std::make_unique<ApiServer>(*engine_);
        port_ = server_->bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_->run(); });
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(30, 0);
        for (int i = 0; i < 200 && !client_->Get("/v1/healthz"); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }
    void TearDown() override {
        server_->stop();
        thread_.join();
    }

    static json body_of(const httplib::Result& r) { return json::parse(r->body); }

    httplib::Result post(const std::string& path, const json& body) {
        return client_->Post(path.c_str(), body.dump(), "application/json");
    }

    void ingest_fixture() {
        auto m = load_manifest(test::fixtures_dir() / "mda-mini.json");
        json req{{"manifest", manifest_to_json(m)}, {"bodies", test::fixture_bodies(m)}};
        auto r = post("/v1/collections", req);
        ASSERT_TRUE(r);
        ASSERT_EQ(r->status, 201) << r->body;
    }

    test::TempDir dir_;
    std::unique_ptr<Engine> engine_;
    std::unique_ptr<ApiServer> server_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace

TEST_F(ApiTest, ListCollectionsStartsEmpty) {
    auto r = client_->Get("/v1/collections");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(body_of(r), (json{{"collections", json::array()}}));
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(ApiTest, FullFlow) {
    ingest_fixture();
    auto list = client_->Get("/v1/collections");
    json cols = body_of(list)["collections"];
    ASSERT_EQ(cols.size(), 1u);
    EXPECT_EQ(cols[0]["collection_id"], "mda-mini");
    EXPECT_FALSE(cols[0]["indexed"].get<bool>());

    auto s = post("/v1/sessions", {{"collection_id", "mda-mini"}});
    ASSERT_EQ(s->status, 201);
    const std::string sid = body_of(s)["session_id"];

    auto not_indexed = post("/v1/sessions/" + sid + "/ask", {{"query", "male breadwinner"}});
    EXPECT_EQ(not_indexed->status, 409);
    EXPECT_EQ(body_of(not_indexed)["error"], "NotIndexed");

    auto idx = post("/v1/collections/mda-mini/index", json::object());
    ASSERT_EQ(idx->status, 200) << idx->body;
    EXPECT_EQ(body_of(idx)["fragments_indexed"], 48);
    EXPECT_TRUE(body_of(client_->Get("/v1/collections/mda-mini"))["indexed"].get<bool>());

    auto ask = post("/v1/sessions/" + sid + "/ask", {{"query", "explain male breadwinner model to me"}});
    ASSERT_EQ(ask->status, 200) << ask->body;
    json a = body_of(ask);
    EXPECT_EQ(a["session_id"], sid);
    EXPECT_EQ(a["turn"], 1);
    EXPECT_FALSE(a["citations"].empty());
    for (const auto& c : a["citations"]) {
        EXPECT_GE(c["confidence"].get<double>(), 0.0);
        EXPECT_LE(c["confidence"].get<double>(), 1.0);
    }
    EXPECT_EQ(a, engine_->session(sid).turns[0].response);

    auto hist = client_->Get(("/v1/sessions/" + sid).c_str());
    EXPECT_EQ(body_of(hist)["turns"].size(), 1u);
    auto health = client_->Get("/v1/healthz");
    EXPECT_EQ(body_of(health)["index_sizes"]["mda-mini"], 48);
}

TEST_F(ApiTest, ErrorBodies) {
    auto r = client_->Get("/v1/collections/missing");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(body_of(r)["error"], "NotFound");
    EXPECT_TRUE(body_of(r).contains("message"));

    r = post("/v1/sessions/s000999/ask", {{"query", "x"}});
    EXPECT_EQ(r->status, 404);
    r = post("/v1/collections/missing/index", json::object());
    EXPECT_EQ(r->status, 404);

    r = client_->Post("/v1/sessions", "not json", "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body_of(r)["error"], "InvalidArgument");
    r = post("/v1/sessions", {{"collection_id", 7}});
    EXPECT_EQ(r->status, 400);
    r = post("/v1/collections", {{"bodies", json::object()}});
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body_of(r)["error"], "MalformedManifest");

    ingest_fixture();
    post("/v1/collections/mda-mini/index", json::object());
    auto s = body_of(post("/v1/sessions", {{"collection_id", "mda-mini"}}))["session_id"].get<std::string>();
    r = post("/v1/sessions/" + s + "/ask", {{"query", "  "}});
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body_of(r)["error"], "EmptyQuery");
    r = post("/v1/sessions/" + s + "/ask", json::object());
    EXPECT_EQ(r->status, 400);
}

TEST_F(ApiTest, IngestWithNoUsableDocumentsReports) {
    auto m = load_manifest(test::fixtures_dir() / "mda-mini.json");
    auto r = post("/v1/collections", {{"manifest", manifest_to_json(m)}, {"bodies", json::object()}});
    ASSERT_EQ(r->status, 400);
    json b = body_of(r);
    EXPECT_EQ(b["error"], "EmptyDocument");
    EXPECT_EQ(b["report"]["documents"], 0);
    EXPECT_EQ(b["report"]["skipped"].size(), 12u);
}

TEST_F(ApiTest, PreflightAllowsBrowserClients) {
    auto r = client_->Options("/v1/sessions");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 204);
    EXPECT_NE(r->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Headers"), "Content-Type");
}
