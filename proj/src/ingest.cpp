// SPDX-License-Identifier: Apache-2.0
#include "exhibit/ingest.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace exhibit {

using nlohmann::json;
namespace fs = std::filesystem;

CorpusManifest read_manifest(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(ErrorKind::manifest_not_found, "manifest not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::manifest_not_found, "manifest not found: " + path.string());

    CorpusManifest m;
    m.image_root = path.parent_path() / "images";
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto body = json::parse(line, nullptr, false);
        if (body.is_discarded() || !body.is_object())
            throw Error(ErrorKind::manifest_parse, "line " + std::to_string(n) + ": not a JSON object");
        const auto kind = body.value("kind", std::string{});
        if (kind == "manifest") {
            if (body.contains("image_root")) {
                if (!body["image_root"].is_string())
                    throw Error(ErrorKind::manifest_parse, "line " + std::to_string(n) + ": image_root must be a string");
                fs::path root = body["image_root"].get<std::string>();
                m.image_root = root.is_relative() ? path.parent_path() / root : root;
            }
        } else if (kind == "collection") {
            m.collections.push_back({n, std::move(body)});
        } else if (kind == "record") {
            m.records.push_back({n, std::move(body)});
        } else {
            throw Error(ErrorKind::manifest_parse, "line " + std::to_string(n) + ": unknown kind '" + kind + "'");
        }
    }
    return m;
}

json IngestReport::to_json() const
{
    json rej = json::array();
    for (const auto& r : rejected)
        rej.push_back({{"kind", r.kind}, {"line", r.line}, {"key", r.key}, {"violations", r.violations}});
    return {{"collections", collections_accepted},
            {"records", records_accepted},
            {"images", images_indexed},
            {"input", {{"collections", collections_input}, {"records", records_input}}},
            {"rejected", rej},
            {"build_seconds", build_seconds},
            {"checksums", checksums},
            {"store", store.string()}};
}

namespace {

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

HnswIndex index_texts(const std::vector<std::pair<MuragId, std::string>>& items, EmbeddingProvider& embedder,
                      const IngestConfig& config)
{
    HnswIndex index(embedder.dimension(), config.hnsw);
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    for (std::size_t i = 0; i < items.size(); i += batch) {
        std::vector<std::string> texts;
        for (std::size_t j = i; j < std::min(items.size(), i + batch); ++j)
            texts.push_back(items[j].second);
        auto vectors = embedder.embed_text(texts);
        for (std::size_t j = 0; j < vectors.size(); ++j)
            index.insert(items[i + j].first, vectors[j]);
    }
    return index;
}

std::string lock_text(const IngestReport& report, const StoreIndexes& idx, const IngestConfig& config,
                      const std::string& embedder_kind)
{
    json files = json::object();
    json images = json::object();
    for (const auto& [name, sum] : report.checksums) {
        if (name.starts_with(std::string(images_dir) + "/"))
            images[name.substr(images_dir.size() + 1)] = sum;
        else
            files[name] = sum;
    }
    json lock = {{"format", 1},
                 {"dimension", idx.record_title.dimension()},
                 {"embedder", embedder_kind},
                 {"hnsw",
                  {{"M", config.hnsw.M},
                   {"ef_construction", config.hnsw.ef_construction},
                   {"ef_search", config.hnsw.ef_search},
                   {"seed", config.hnsw.seed}}},
                 {"bm25", {{"k1", config.bm25.k1}, {"b", config.bm25.b}}},
                 {"counts",
                  {{"collections", report.collections_accepted},
                   {"records", report.records_accepted},
                   {"images", report.images_indexed}}},
                 {"files", files},
                 {"images", images}};
    return lock.dump(2) + "\n";
}

bool looks_like_store(const fs::path& dir)
{
    std::error_code ec;
    if (fs::exists(dir / lock_file, ec))
        return true;
    return fs::is_directory(dir, ec) && fs::is_empty(dir, ec);
}

} // namespace

StoreIndexes build_indexes(const Catalog& catalog, EmbeddingProvider& embedder, const IngestConfig& config,
                           std::map<std::string, double>* build_seconds)
{
    config.hnsw.validate();
    config.bm25.validate();
    auto timed = [&](VectorField f, auto&& fn) {
        Stopwatch sw;
        auto index = fn();
        if (build_seconds)
            (*build_seconds)[std::string(index_file_name(f))] = sw.seconds();
        return index;
    };

    std::vector<std::pair<MuragId, std::string>> rtitles, ctitles, cdescs;
    for (const auto& r : catalog.records())
        rtitles.emplace_back(r.murag_id, catalog.display_title(r));
    for (const auto& c : catalog.collections()) {
        ctitles.emplace_back(c.murag_id, c.title);
        cdescs.emplace_back(c.murag_id, c.description);
    }

    auto rtitle = timed(VectorField::record_title, [&] { return index_texts(rtitles, embedder, config); });
    auto image = timed(VectorField::record_image, [&] {
        HnswIndex index(embedder.dimension(), config.hnsw);
        for (const auto& r : catalog.records())
            if (auto img = catalog.load_image(r.image_name))
                index.insert(r.murag_id, embedder.embed_image(*img));
        return index;
    });
    auto ctitle = timed(VectorField::collection_title, [&] { return index_texts(ctitles, embedder, config); });
    auto cdesc = timed(VectorField::collection_description, [&] { return index_texts(cdescs, embedder, config); });

    Stopwatch sw;
    std::vector<LexicalDoc> docs;
    for (const auto& [id, text] : rtitles)
        docs.push_back({id, LexicalKind::record_title, text});
    for (const auto& c : catalog.collections()) {
        docs.push_back({MuragId(collection_title_doc(c.murag_id)), LexicalKind::collection_title, c.title});
        docs.push_back(
            {MuragId(collection_description_doc(c.murag_id)), LexicalKind::collection_description, c.description});
    }
    auto lexical = Bm25Index::build(docs, config.bm25);
    if (build_seconds)
        (*build_seconds)[std::string(bm25_file)] = sw.seconds();

    return StoreIndexes{std::move(image), std::move(rtitle), std::move(ctitle), std::move(cdesc), std::move(lexical)};
}

IngestReport ingest(const fs::path& manifest_path, const fs::path& out_dir, EmbeddingProvider& embedder,
                    const IngestConfig& config)
{
    const auto manifest = read_manifest(manifest_path);
    IngestReport report;
    report.collections_input = manifest.collections.size();
    report.records_input = manifest.records.size();

    std::vector<CollectionDescriptor> collections;
    for (const auto& entry : manifest.collections) {
        CollectionDescriptor c;
        Violations v;
        try {
            c = entry.body.get<CollectionDescriptor>();
        } catch (const std::exception& e) {
            v.push_back(std::string("malformed collection: ") + e.what());
        }
        if (v.empty()) {
            if (!c.collection_name.empty())
                c.murag_id = make_collection_id(c.collection_name);
            v = validate_collection(c, collections);
        }
        if (!v.empty()) {
            report.rejected.push_back({"collection", entry.line, entry.body.value("collection_name", ""), v});
            continue;
        }
        collections.push_back(std::move(c));
    }

    std::vector<RecordDescriptor> records;
    std::set<std::string> seen_ids;
    std::unordered_map<std::int64_t, std::size_t> first_of_fundus;
    for (const auto& entry : manifest.records) {
        RecordDescriptor r;
        Violations v;
        try {
            r = entry.body.get<RecordDescriptor>();
        } catch (const std::exception& e) {
            v.push_back(std::string("malformed record: ") + e.what());
        }
        const CollectionDescriptor* parent = nullptr;
        if (v.empty()) {
            for (const auto& c : collections)
                if (c.collection_name == r.collection_name)
                    parent = &c;
            v = validate_record(r, parent);
        }
        if (v.empty()) {
            if (parent && derive_title(r, *parent).empty())
                v.push_back("empty title");
            const auto media = media_type_for_path(r.image_name);
            std::error_code ec;
            if (media.empty())
                v.push_back("unsupported image type " + r.image_name);
            else if (!fs::is_regular_file(manifest.image_root / r.image_name, ec))
                v.push_back("missing image");
            else if (fs::file_size(manifest.image_root / r.image_name, ec) > embedder.max_image_bytes())
                v.push_back("oversize image");
        }
        if (v.empty()) {
            r.murag_id = make_record_id(r.collection_name, r.catalogno, r.image_name);
            if (seen_ids.contains(r.murag_id.value()))
                v.push_back("duplicate murag_id " + r.murag_id.value());
        }
        if (v.empty()) {
            if (auto it = first_of_fundus.find(r.fundus_id); it != first_of_fundus.end()) {
                const auto& first = records[it->second];
                if (first.title != r.title || first.catalogno != r.catalogno ||
                    first.collection_name != r.collection_name || first.details != r.details)
                    v.push_back("inconsistent multi-image record (fundus_id " + std::to_string(r.fundus_id) + ")");
            }
        }
        if (!v.empty()) {
            auto key = entry.body.value("catalogno", std::string{});
            if (auto img = entry.body.value("image_name", std::string{}); !img.empty())
                key += (key.empty() ? "" : "/") + img;
            report.rejected.push_back({"record", entry.line, key, v});
            continue;
        }
        seen_ids.insert(r.murag_id.value());
        first_of_fundus.emplace(r.fundus_id, records.size());
        records.push_back(std::move(r));
    }
    report.collections_accepted = collections.size();
    report.records_accepted = records.size();
    for (const auto& rej : report.rejected)
        spdlog::warn("rejected {} at line {} ({}): {}", rej.kind, rej.line, rej.key, rej.violations.front());

    if (fs::exists(out_dir) && !looks_like_store(out_dir))
        throw Error(ErrorKind::io, "refusing to replace " + out_dir.string() + ": not an existing store");
    const auto parent_dir = out_dir.has_parent_path() ? out_dir.parent_path() : fs::path(".");
    fs::create_directories(parent_dir);
    const auto tmp = parent_dir / (out_dir.filename().string() + ".tmp-" + random_hex(6));

    try {
        fs::create_directories(tmp / images_dir);
        Catalog catalog(collections, records, manifest.image_root);
        auto indexes = build_indexes(catalog, embedder, config, &report.build_seconds);
        report.images_indexed = indexes.record_image.size();

        auto put = [&](const std::string& name, const std::string& bytes) {
            write_file(tmp / name, bytes);
            report.checksums[name] = sha256_hex(bytes);
        };
        put(std::string(collections_file), to_jsonl(collections));
        put(std::string(records_file), to_jsonl(records));
        for (auto f : all_vector_fields)
            put(std::string(index_file_name(f)), indexes.vector(f).serialize());
        put(std::string(bm25_file), indexes.lexical.serialize());
        std::set<std::string> copied;
        for (const auto& r : records)
            if (copied.insert(r.image_name).second)
                put(std::string(images_dir) + "/" + r.image_name, read_file(manifest.image_root / r.image_name));
        write_file(tmp / lock_file, lock_text(report, indexes, config, config.embedder_kind));

        if (fs::exists(out_dir))
            fs::remove_all(out_dir);
        fs::rename(tmp, out_dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    report.store = out_dir;
    return report;
}

} // namespace exhibit
