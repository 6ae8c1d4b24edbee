#pragma once

#include "gw/retrieval.hpp"

#include "test_support.hpp"

namespace gw::test {

// The mda-mini fixture split, embedded with the stopword-aware hashing embedder,
// and indexed; the same setup the engine uses offline.
struct MdaFixture {
    FragmentStore store;
    std::shared_ptr<const StoredCollection> collection;
    HashingEmbedder embedder{256, kDefaultHashSeed,
                             std::make_shared<std::unordered_set<std::string>>(english_stopwords()), "en-v1"};
    std::unique_ptr<FlatIndex> index;
    StatisticalTermExtractor extractor;
    std::shared_ptr<SkosFixtureClient> kg = load_skos_fixture(fixtures_dir() / "kos-mini.ttl-json");

    MdaFixture() {
        auto m = load_manifest(fixtures_dir() / "mda-mini.json");
        ingest_collection(m, fixture_bodies(m), store);
        collection = store.get("mda-mini");
        std::vector<std::string> texts;
        for (const auto& f : collection->fragments) texts.push_back(f.text);
        auto vectors = embed_texts(texts, embedder);
        index = std::make_unique<FlatIndex>(256, embedder.id());
        std::vector<IndexEntry> entries;
        auto metas = collection->metas();
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto& f = collection->fragments[i];
            entries.push_back({f.fragment_id, f.doc_id, vectors[i], metas.at(f.doc_id).language});
        }
        index->upsert(entries);
    }

    RetrievalDeps deps(bool with_kg = true) {
        return RetrievalDeps{*collection, *index, extractor, with_kg ? kg.get() : nullptr, embedder};
    }

    static MdaFixture& shared() {
        static MdaFixture f;
        return f;
    }
};

} // namespace gw::test
