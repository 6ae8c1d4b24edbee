#include "gw/synthesis.hpp"

#include "gw/error.hpp"
#include "gw/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gw {

namespace {

using nlohmann::json;

constexpr const char* kSystemPreamble =
    "You are a research assistant answering questions about a local document collection. "
    "Use only the numbered sources below. Each source block comes from a single document; "
    "sources may disagree, so keep their perspectives apart and attribute every statement "
    "to the source it comes from.";

constexpr const char* kCitationInstruction =
    "Answer the question using only the sources above. Cite every statement with the "
    "[SOURCE n] marker of the source it comes from. If the sources do not contain the "
    "answer, say so.";

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

// Leading `count` sentences (terminated by . ? ! followed by whitespace).
std::string leading_sentences(std::string_view s, std::size_t count) {
    std::size_t found = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        char c = s[i];
        char next = s[i + 1];
        if ((c == '.' || c == '?' || c == '!') && (next == ' ' || next == '\n' || next == '\t' || next == '\r')) {
            if (++found == count) return collapse_whitespace(s.substr(0, i + 1));
        }
    }
    return collapse_whitespace(s);
}

} // namespace

std::string provenance_header(const DocumentMeta& meta) {
    std::string authors;
    for (std::size_t i = 0; i < meta.authors.size(); ++i) {
        if (i > 0) authors += ", ";
        authors += meta.authors[i];
    }
    if (authors.empty()) authors = "unknown authors";
    return meta.title + " — " + authors + " (" + meta.publication_date.value_or("n.d.") + ") — " +
           meta.source_uri.value_or("no source uri");
}

ContextPack pack_context(const RankedRetrieval& ranked, std::size_t budget_tokens, const TokenEstimator& estimator,
                         const PackOptions& options) {
    if (!(options.safety_margin >= 0.0 && options.safety_margin < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "safety margin must be in [0, 1)");
    }
    const auto usable =
        static_cast<std::size_t>(std::floor(static_cast<double>(budget_tokens) * (1.0 - options.safety_margin)));

    ContextPack pack;
    pack.budget = budget_tokens;
    for (const auto& cluster : ranked.clusters) {
        if (cluster.hits.empty()) continue;
        ContextBlock block;
        block.doc_meta = cluster.doc_meta;
        block.doc_score = cluster.doc_score;
        block.confidence = cluster.confidence;
        block.provenance_header = provenance_header(cluster.doc_meta);
        std::size_t cost = kBlockOverheadTokens + estimator.estimate(block.provenance_header);
        for (const auto& hit : cluster.hits) {
            const std::size_t add = kFragmentOverheadTokens + estimator.estimate(hit.fragment.text);
            if (pack.token_estimate + cost + add > usable) break;
            cost += add;
            block.fragment_ids.push_back(hit.fragment.fragment_id);
            block.fragment_texts.push_back(hit.fragment.text);
        }
        if (block.fragment_ids.empty()) break;
        block.tokens = cost;
        pack.token_estimate += cost;
        pack.blocks.push_back(std::move(block));
    }
    if (pack.blocks.empty()) {
        throw Error(ErrorCode::BudgetTooSmall, ranked.clusters.empty()
                                                   ? "nothing to pack: retrieval returned no clusters"
                                                   : "budget of " + std::to_string(budget_tokens) +
                                                         " tokens cannot hold the top source");
    }
    return pack;
}

std::string Prompt::combined() const { return system + "\n\n" + user; }

Prompt build_prompt(std::string_view query, const ContextPack& pack) {
    std::ostringstream user;
    user << "Sources:\n";
    for (std::size_t i = 0; i < pack.blocks.size(); ++i) {
        const auto& b = pack.blocks[i];
        user << "\n[SOURCE " << (i + 1) << "] " << b.provenance_header << "\n";
        for (std::size_t f = 0; f < b.fragment_texts.size(); ++f) {
            if (f > 0) user << "\n";
            user << b.fragment_texts[f] << "\n";
        }
    }
    user << "\nQuestion: " << text::trim(query) << "\n\n" << kCitationInstruction << "\n";
    return Prompt{kSystemPreamble, user.str()};
}

std::string format_prompt(std::string_view query, const ContextPack& pack) {
    return build_prompt(query, pack).combined();
}

HttpLlmProvider::HttpLlmProvider(std::shared_ptr<JsonHttpClient> client, std::string model_id, std::string path,
                                 double requests_per_second)
    : client_(std::move(client)), model_id_(std::move(model_id)), path_(std::move(path)) {
    if (requests_per_second > 0.0) limiter_ = std::make_unique<TokenBucket>(requests_per_second, 1.0);
}

std::string HttpLlmProvider::complete(const std::vector<ChatMessage>& messages) {
    if (limiter_) limiter_->acquire();
    json request{{"model_id", model_id_}, {"messages", json::array()}};
    for (const auto& m : messages) request["messages"].push_back({{"role", m.role}, {"content", m.content}});
    json response = client_->post(path_, request);
    if (!response.is_object() || !response.contains("text") || !response["text"].is_string()) {
        throw Error(ErrorCode::ProviderUnavailable, client_->provider_name() + ": response lacks 'text'",
                    client_->provider_name());
    }
    std::string text = response["text"].get<std::string>();
    if (text::is_blank(text)) {
        throw Error(ErrorCode::ProviderUnavailable, client_->provider_name() + ": empty answer", client_->provider_name());
    }
    return text;
}

std::string extractive_answer(const ContextPack& pack) {
    if (pack.blocks.empty() || pack.blocks.front().fragment_texts.empty()) {
        throw Error(ErrorCode::InvalidArgument, "extractive answer needs a non-empty pack");
    }
    const auto& top = pack.blocks.front();
    return "Based on " + top.doc_meta.title + ": " + leading_sentences(top.fragment_texts.front(), 3);
}

Answer synthesize(std::string_view query, const ContextPack& pack, LlmProvider* llm) {
    if (pack.blocks.empty()) throw Error(ErrorCode::InvalidArgument, "synthesize: empty context pack");

    Answer answer;
    if (llm == nullptr) {
        answer.text = extractive_answer(pack);
        answer.model_id = kExtractiveModelId;
        answer.offline = true;
    } else {
        Prompt prompt = build_prompt(query, pack);
        answer.text = llm->complete({{"system", prompt.system}, {"user", prompt.user}});
        answer.model_id = llm->model_id();
        answer.offline = false;
    }
    for (const auto& b : pack.blocks) {
        if (b.fragment_ids.empty()) continue;
        answer.citations.push_back({b.doc_meta, b.confidence, b.fragment_ids, b.fragment_texts});
    }
    std::stable_sort(answer.citations.begin(), answer.citations.end(), [](const Citation& a, const Citation& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.doc_meta.doc_id < b.doc_meta.doc_id;
    });
    return answer;
}

json to_json(const Citation& c) {
    json fragments = json::array();
    for (std::size_t i = 0; i < c.fragment_ids.size(); ++i) {
        fragments.push_back({{"fragment_id", c.fragment_ids[i]},
                             {"text", i < c.fragment_texts.size() ? c.fragment_texts[i] : std::string()}});
    }
    return {{"doc_id", c.doc_meta.doc_id},
            {"title", c.doc_meta.title},
            {"authors", c.doc_meta.authors},
            {"date", c.doc_meta.publication_date ? json(*c.doc_meta.publication_date) : json(nullptr)},
            {"uri", c.doc_meta.source_uri ? json(*c.doc_meta.source_uri) : json(nullptr)},
            {"language", c.doc_meta.language},
            {"confidence", c.confidence},
            {"fragments", fragments}};
}

json to_json(const Answer& a) {
    json citations = json::array();
    for (const auto& c : a.citations) citations.push_back(to_json(c));
    return {{"answer_text", a.text}, {"citations", citations}, {"model_id", a.model_id}, {"offline", a.offline}};
}

Answer answer_from_json(const json& j) {
    Answer a;
    a.text = j.at("answer_text").get<std::string>();
    a.model_id = j.at("model_id").get<std::string>();
    a.offline = j.at("offline").get<bool>();
    for (const auto& c : j.at("citations")) {
        Citation cit;
        cit.doc_meta.doc_id = c.at("doc_id").get<std::string>();
        cit.doc_meta.title = c.at("title").get<std::string>();
        cit.doc_meta.authors = c.at("authors").get<std::vector<std::string>>();
        if (!c.at("date").is_null()) cit.doc_meta.publication_date = c["date"].get<std::string>();
        if (!c.at("uri").is_null()) cit.doc_meta.source_uri = c["uri"].get<std::string>();
        cit.doc_meta.language = c.value("language", "en");
        cit.confidence = c.at("confidence").get<double>();
        for (const auto& f : c.at("fragments")) {
            cit.fragment_ids.push_back(f.at("fragment_id").get<std::string>());
            cit.fragment_texts.push_back(f.at("text").get<std::string>());
        }
        a.citations.push_back(std::move(cit));
    }
    return a;
}

} // namespace gw
