#include "gw/embedding.hpp"
#include "gw/error.hpp"
#include "gw/http_json.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gw;
using nlohmann::json;

TEST(HashingEmbedder, MatchesReferenceVectors) {
    auto golden = test::read_json(test::golden_dir() / "hashing_vectors.json");
    HashingEmbedder e(golden["dimension"].get<std::size_t>());
    std::map<std::string, EmbeddingVector> got;
    for (const auto& [key, text] : golden["texts"].items()) {
        std::vector<std::string> one{text.get<std::string>()};
        got[key] = embed_texts(one, e).at(0);
        auto expected = golden["vectors"][key].get<std::vector<double>>();
        ASSERT_EQ(got[key].values.size(), expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(got[key].values[i], expected[i], 1e-12) << key;
    }
    for (const auto& [pair, cos] : golden["cosines"].items()) {
        auto a = pair.substr(0, pair.find('-'));
        auto b = pair.substr(pair.find('-') + 1);
        EXPECT_NEAR(cosine(got[a], got[b]), cos.get<double>(), 1e-12) << pair;
    }
}

TEST(HashingEmbedder, IdNamesConfiguration) {
    auto stop = std::make_shared<std::unordered_set<std::string>>(std::unordered_set<std::string>{"the"});
    EXPECT_EQ(HashingEmbedder(256).id(), "hashing-fnv1a/1 d=256 seed=5eed5eed5eed5eed");
    EXPECT_EQ(HashingEmbedder(64, 1, stop, "en-v1").id(), "hashing-fnv1a/1 d=64 seed=1 stop=en-v1");
    EXPECT_THROW(HashingEmbedder(0), Error);
}

TEST(HashingEmbedder, StopwordsSkippedUnlessNothingElse) {
    auto stop = std::make_shared<std::unordered_set<std::string>>(std::unordered_set<std::string>{"the", "of"});
    HashingEmbedder plain(256);
    HashingEmbedder filtered(256, kDefaultHashSeed, stop, "t");
    std::vector<std::string> texts{"the model of care", "model care", "the of"};
    auto f = embed_texts(texts, filtered);
    auto p = embed_texts(texts, plain);
    EXPECT_NEAR(cosine(f[0], f[1]), 1.0, 1e-12);
    EXPECT_EQ(f[2], EmbeddingVector(p[2].values, filtered.id()));
}

// Property: every stored vector has unit norm, and embedding is deterministic
// and independent of batching.
TEST(HashingEmbedder, PropertyUnitNormDeterministic) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> vocab{"care", "Ernährer", "model", "survey", "über", "1990", "x", "panel"};
    std::vector<std::string> texts;
    for (int i = 0; i < 500; ++i) {
        std::string t;
        for (int n = 1 + rng() % 30; n > 0; --n) t += vocab[rng() % vocab.size()] + " ";
        texts.push_back(t);
    }
    HashingEmbedder e(128, 99);
    auto a = embed_texts(texts, e);
    auto b = embed_texts(texts, e);
    ASSERT_EQ(a, b);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        double n = std::sqrt(dot(a[i].values, a[i].values));
        ASSERT_NEAR(n, 1.0, 1e-6);
        std::vector<std::string> one{texts[i]};
        ASSERT_EQ(embed_texts(one, e)[0], a[i]);
    }
}

TEST(Embedding, RejectsEmptyTextAndZeroVectors) {
    HashingEmbedder e;
    std::vector<std::string> blank{"  "};
    EXPECT_THROW(embed_texts(blank, e), Error);
    try {
        make_unit_vector({0.0, 0.0}, "p");
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::EmptyText);
    }
    EXPECT_THROW(make_unit_vector({1.0, NAN}, "p"), Error);
    std::vector<std::string> punct{"!!! ..."};
    EXPECT_THROW(embed_texts(punct, e), Error);
}

TEST(Embedding, CosineHelpers) {
    auto a = make_unit_vector({3.0, 4.0}, "p");
    auto b = make_unit_vector({4.0, 3.0}, "p");
    EXPECT_NEAR(cosine(a, b), 24.0 / 25.0, 1e-15);
    std::vector<double> x{3.0, 4.0}, y{-6.0, -8.0};
    EXPECT_NEAR(cosine_unnormalized(x, y), -1.0, 1e-15);
    EXPECT_THROW(embed_texts(std::vector<std::string>{"a"}, *std::make_unique<HashingEmbedder>(8), 16), Error);
}

namespace {

class EmbeddingMock {
public:
    explicit EmbeddingMock(std::size_t dim) : dim_(dim) {
        mock.server().Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls;
            if (transient > 0) {
                --transient;
                res.status = 500;
                return;
            }
            json body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& t : body["texts"]) {
                std::vector<double> v(dim_, 0.0);
                v[t.get<std::string>().size() % dim_] = 2.0;
                v[0] += 1.0;
                vectors.push_back(v);
            }
            res.set_content(json{{"dimension", dim_}, {"vectors", vectors}}.dump(), "application/json");
        });
        mock.start();
    }

    test::MockServer mock;
    std::atomic<int> calls{0};
    std::atomic<int> transient{0};

private:
    std::size_t dim_;
};

std::shared_ptr<JsonHttpClient> client_for(const std::string& url, TranscriptMode mode = TranscriptMode::Live,
                                           TranscriptStore* store = nullptr) {
    return std::make_shared<JsonHttpClient>(HttpEndpoint{url, std::nullopt, std::chrono::milliseconds(2000)},
                                            "embedding:m", ErrorCode::ProviderUnavailable, mode, store,
                                            RetryPolicy{2, std::chrono::milliseconds(1)});
}

} // namespace

TEST(HttpEmbedding, BatchesAndNormalizes) {
    EmbeddingMock m(8);
    HttpEmbeddingProvider p(client_for(m.mock.url()), "m", 8, 2);
    std::vector<std::string> texts{"a", "bb", "ccc", "dddd", "eeeee"};
    auto v = embed_texts(texts, p, 8);
    EXPECT_EQ(m.calls, 3);
    ASSERT_EQ(v.size(), 5u);
    for (const auto& x : v) {
        EXPECT_NEAR(std::sqrt(dot(x.values, x.values)), 1.0, 1e-12);
        EXPECT_EQ(x.provider_id, "http:m");
    }
    EXPECT_GT(v[1].values[2], v[1].values[0]);
}

TEST(HttpEmbedding, RetriesThenSucceeds) {
    EmbeddingMock m(4);
    m.transient = 2;
    HttpEmbeddingProvider p(client_for(m.mock.url()), "m", 4);
    EXPECT_EQ(embed_texts(std::vector<std::string>{"x"}, p).size(), 1u);
    EXPECT_EQ(m.calls, 3);
}

TEST(HttpEmbedding, DimensionMismatchIsReported) {
    EmbeddingMock m(4);
    HttpEmbeddingProvider p(client_for(m.mock.url()), "m", 8);
    try {
        embed_texts(std::vector<std::string>{"x"}, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(HttpEmbedding, PersistentFailureNamesProvider) {
    EmbeddingMock m(4);
    m.transient = 100;
    HttpEmbeddingProvider p(client_for(m.mock.url()), "m", 4);
    try {
        embed_texts(std::vector<std::string>{"x"}, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderUnavailable);
        EXPECT_EQ(e.provider(), "embedding:m");
    }
    EXPECT_EQ(m.calls, 3);
}

TEST(Transcripts, RecordThenReplayWithoutNetwork) {
    test::TempDir dir;
    TranscriptStore store(dir.path());
    std::vector<std::string> texts{"male breadwinner model", "care"};
    std::vector<EmbeddingVector> recorded;
    {
        EmbeddingMock m(4);
        HttpEmbeddingProvider p(client_for(m.mock.url(), TranscriptMode::Record, &store), "m", 4);
        recorded = embed_texts(texts, p);
    }
    HttpEmbeddingProvider replay(client_for("http://127.0.0.1:1", TranscriptMode::Replay, &store), "m", 4);
    EXPECT_EQ(embed_texts(texts, replay), recorded);
    EXPECT_THROW(embed_texts(std::vector<std::string>{"unrecorded"}, replay), Error);
    EXPECT_THROW(JsonHttpClient(HttpEndpoint{}, "x", ErrorCode::Io, TranscriptMode::Replay), Error);
}

TEST(HttpJson, HelpersAndRateLimit) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(split_base_url("http://h:8/api/"), (std::pair<std::string, std::string>{"http://h:8", "/api"}));
    EXPECT_EQ(split_base_url("http://h:8"), (std::pair<std::string, std::string>{"http://h:8", ""}));
    EXPECT_EQ(TranscriptStore::request_hash("/p", json{{"b", 1}, {"a", 2}}),
              TranscriptStore::request_hash("/p", json{{"a", 2}, {"b", 1}}));
    ::setenv("GW_TEST_KEY", "k", 1);
    EXPECT_EQ(api_key_from_env("GW_TEST_KEY"), "k");
    EXPECT_FALSE(api_key_from_env("GW_TEST_KEY_UNSET"));
    TokenBucket bucket(50.0, 1.0);
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) bucket.acquire();
    EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(90));
}
