#include "gw/fragment_store.hpp"

#include "gw/error.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

namespace gw {

namespace {

using nlohmann::json;

constexpr const char* kStoreFormat = "gw-fragments/1";
constexpr const char* kStoreFile = "fragments.jsonl";

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::map<std::string, DocumentMeta> StoredCollection::metas() const {
    std::map<std::string, DocumentMeta> out;
    for (const auto& d : manifest.documents) out.emplace(d.doc_id, d);
    return out;
}

json to_json(const IngestReport& report) {
    json skipped = json::array();
    for (const auto& s : report.skipped) skipped.push_back({{"doc_id", s.doc_id}, {"reason", s.reason}});
    return {{"collection_id", report.collection_id},
            {"documents", report.documents},
            {"fragments", report.fragments},
            {"skipped", skipped}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::StoreWriteError, "cannot open " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error(ErrorCode::StoreWriteError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::StoreWriteError, "rename to " + path.string() + ": " + ec.message());
}

FragmentStore::FragmentStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FragmentStore::collection_dir(const std::string& collection_id) const {
    if (!root_) throw Error(ErrorCode::InvalidArgument, "fragment store has no root directory");
    return *root_ / collection_id;
}

void FragmentStore::put(StoredCollection collection) {
    if (collection.manifest.collection_id.empty()) {
        throw Error(ErrorCode::InvalidArgument, "collection_id is empty");
    }
    auto snapshot = std::make_shared<const StoredCollection>(std::move(collection));
    std::unique_lock lock(mutex_);
    if (root_) save_file(*snapshot, collection_dir(snapshot->manifest.collection_id) / kStoreFile);
    collections_[snapshot->manifest.collection_id] = std::move(snapshot);
}

std::shared_ptr<const StoredCollection> FragmentStore::get(const std::string& collection_id) const {
    std::shared_lock lock(mutex_);
    auto it = collections_.find(collection_id);
    return it == collections_.end() ? nullptr : it->second;
}

std::vector<std::string> FragmentStore::collection_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : collections_) ids.push_back(id);
    return ids;
}

void FragmentStore::load_all() {
    if (!root_ || !std::filesystem::exists(*root_)) return;
    std::map<std::string, std::shared_ptr<const StoredCollection>> loaded;
    for (const auto& entry : std::filesystem::directory_iterator(*root_)) {
        auto file = entry.path() / kStoreFile;
        if (!entry.is_directory() || !std::filesystem::exists(file)) continue;
        auto c = std::make_shared<const StoredCollection>(load_file(file));
        loaded[c->manifest.collection_id] = std::move(c);
    }
    std::unique_lock lock(mutex_);
    for (auto& [id, c] : loaded) collections_[id] = std::move(c);
}

void FragmentStore::write_jsonl(const StoredCollection& c, std::ostream& out) {
    json header;
    header["record"] = "header";
    header["format"] = kStoreFormat;
    header["collection_id"] = c.manifest.collection_id;
    header["title"] = c.manifest.title;
    header["created_at"] = c.manifest.created_at;
    header["manifest_version"] = c.manifest.manifest_version;
    header["documents"] = json::array();
    for (const auto& d : c.manifest.documents) header["documents"].push_back(meta_to_json(d));
    header["fragment_count"] = c.fragments.size();
    out << header.dump() << '\n';
    for (const auto& f : c.fragments) {
        json line;
        line["record"] = "fragment";
        line["fragment_id"] = f.fragment_id;
        line["doc_id"] = f.doc_id;
        line["ordinal"] = f.ordinal;
        line["text"] = f.text;
        line["span"] = {f.span.start, f.span.end};
        out << line.dump() << '\n';
    }
}

StoredCollection FragmentStore::read_jsonl(std::istream& in) {
    StoredCollection c;
    std::string line;
    std::size_t expected = 0;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            if (!have_header) {
                if (j.at("record") != "header" || j.at("format") != kStoreFormat) {
                    throw Error(ErrorCode::Io, "fragment store: bad header record");
                }
                c.manifest.collection_id = j.at("collection_id").get<std::string>();
                c.manifest.title = j.at("title").get<std::string>();
                c.manifest.created_at = j.at("created_at").get<std::string>();
                c.manifest.manifest_version = j.at("manifest_version").get<std::string>();
                for (const auto& d : j.at("documents")) c.manifest.documents.push_back(meta_from_json(d, "documents"));
                expected = j.at("fragment_count").get<std::size_t>();
                have_header = true;
                continue;
            }
            Fragment f;
            f.fragment_id = j.at("fragment_id").get<std::string>();
            f.doc_id = j.at("doc_id").get<std::string>();
            f.ordinal = j.at("ordinal").get<std::uint32_t>();
            f.text = j.at("text").get<std::string>();
            f.span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
            c.fragments.push_back(std::move(f));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Io, "fragment store line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw Error(ErrorCode::Io, "fragment store: missing header");
    if (c.fragments.size() != expected) {
        throw Error(ErrorCode::Io, "fragment store: expected " + std::to_string(expected) + " fragments, found " +
                                       std::to_string(c.fragments.size()));
    }
    return c;
}

void FragmentStore::save_file(const StoredCollection& c, const std::filesystem::path& path) {
    std::ostringstream out;
    write_jsonl(c, out);
    write_file_atomic(path, out.str());
}

StoredCollection FragmentStore::load_file(const std::filesystem::path& path) {
    std::istringstream in(read_all(path));
    return read_jsonl(in);
}

IngestReport ingest_collection(const CollectionManifest& manifest,
                               const std::map<std::string, std::string>& doc_bodies, FragmentStore& store,
                               const SplitPolicy& policy) {
    IngestReport report;
    report.collection_id = manifest.collection_id;

    StoredCollection collection;
    collection.manifest = manifest;
    collection.manifest.documents.clear();

    for (const auto& meta : manifest.documents) {
        auto body = doc_bodies.find(meta.doc_id);
        if (body == doc_bodies.end()) {
            report.skipped.push_back({meta.doc_id, "no body"});
            continue;
        }
        try {
            auto fragments = split_document(Document{meta, body->second}, policy);
            collection.manifest.documents.push_back(meta);
            for (auto& f : fragments) collection.fragments.push_back(std::move(f));
        } catch (const Error& e) {
            report.skipped.push_back({meta.doc_id, e.what()});
        }
    }

    report.documents = collection.manifest.documents.size();
    report.fragments = collection.fragments.size();
    if (report.documents > 0) store.put(std::move(collection));
    return report;
}

BodyExtractor external_command_extractor(std::string command) {
    return [command = std::move(command)](const std::filesystem::path& file) -> std::optional<std::string> {
        std::string quoted = "'";
        for (char c : file.string()) {
            if (c == '\'') quoted += "'\\''";
            else quoted += c;
        }
        quoted += "'";
        const std::string cmd = command + " " + quoted;
        FILE* pipe = ::popen(cmd.c_str(), "r");
        if (pipe == nullptr) return std::nullopt;
        std::string out;
        std::array<char, 4096> buf{};
        std::size_t n = 0;
        while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
        int status = ::pclose(pipe);
        if (status != 0) return std::nullopt;
        return out;
    };
}

std::map<std::string, std::string> read_bodies(const std::filesystem::path& dir, const CollectionManifest& manifest,
                                               const BodyExtractor& extractor) {
    std::map<std::string, std::string> bodies;
    for (const auto& meta : manifest.documents) {
        auto txt = dir / (meta.doc_id + ".txt");
        if (std::filesystem::exists(txt)) {
            bodies[meta.doc_id] = read_all(txt);
            continue;
        }
        if (!extractor || !std::filesystem::exists(dir)) continue;
        std::vector<std::filesystem::path> candidates;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().stem() == meta.doc_id) candidates.push_back(entry.path());
        }
        std::sort(candidates.begin(), candidates.end());
        for (const auto& c : candidates) {
            if (auto body = extractor(c)) {
                bodies[meta.doc_id] = std::move(*body);
                break;
            }
        }
    }
    return bodies;
}

} // namespace gw
