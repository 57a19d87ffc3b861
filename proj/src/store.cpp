// SPDX-License-Identifier: Apache-2.0
#include "exhibit/store.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <algorithm>
#include <sstream>

namespace exhibit {

using nlohmann::json;

void to_json(json& j, const CorpusStats& s)
{
    j = {{"total_records", s.total_records},
         {"total_collections", s.total_collections},
         {"records_per_collection", s.records_per_collection}};
}

std::string_view index_file_name(VectorField field)
{
    switch (field) {
    case VectorField::record_image: return "hnsw_image.idx";
    case VectorField::record_title: return "hnsw_rtitle.idx";
    case VectorField::collection_title: return "hnsw_ctitle.idx";
    case VectorField::collection_description: return "hnsw_cdesc.idx";
    }
    return {};
}

std::string collection_title_doc(const MuragId& collection)
{
    return collection.value() + ":title";
}

std::string collection_description_doc(const MuragId& collection)
{
    return collection.value() + ":description";
}

Catalog::Catalog(std::vector<CollectionDescriptor> collections, std::vector<RecordDescriptor> records,
                 std::filesystem::path image_root)
    : collections_(std::move(collections)), records_(std::move(records)), image_root_(std::move(image_root))
{
    for (std::size_t i = 0; i < collections_.size(); ++i) {
        const auto& c = collections_[i];
        for (const auto& key : {c.collection_name, c.murag_id.value()})
            if (!collection_by_key_.emplace(key, i).second)
                throw Error(ErrorKind::duplicate_id, "duplicate collection key " + key);
    }
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (!record_by_id_.emplace(records_[i].murag_id.value(), i).second)
            throw Error(ErrorKind::duplicate_id, "duplicate record id " + records_[i].murag_id.value());
}

const RecordDescriptor* Catalog::find_record(const MuragId& id) const
{
    return find_record(std::string_view(id.value()));
}

const RecordDescriptor* Catalog::find_record(std::string_view id) const
{
    auto it = record_by_id_.find(std::string(id));
    return it == record_by_id_.end() ? nullptr : &records_[it->second];
}

const CollectionDescriptor* Catalog::find_collection(std::string_view name_or_id) const
{
    auto it = collection_by_key_.find(std::string(name_or_id));
    return it == collection_by_key_.end() ? nullptr : &collections_[it->second];
}

const RecordDescriptor& Catalog::get_record(std::string_view id) const
{
    if (const auto* r = find_record(id))
        return *r;
    throw Error(ErrorKind::not_found, "no record with murag_id " + std::string(id));
}

const CollectionDescriptor& Catalog::get_collection(std::string_view name_or_id) const
{
    if (const auto* c = find_collection(name_or_id))
        return *c;
    throw Error(ErrorKind::not_found, "no collection named or identified by " + std::string(name_or_id));
}

std::vector<CollectionDescriptor> Catalog::list_collections() const
{
    auto out = collections_;
    std::ranges::sort(out, {}, &CollectionDescriptor::collection_name);
    return out;
}

CorpusStats Catalog::stats() const
{
    CorpusStats s;
    s.total_records = records_.size();
    s.total_collections = collections_.size();
    for (const auto& c : collections_)
        s.records_per_collection[c.collection_name] = 0;
    for (const auto& r : records_)
        ++s.records_per_collection[r.collection_name];
    return s;
}

std::optional<ImageData> Catalog::load_image(std::string_view image_name) const
{
    if (image_name.empty() || image_root_.empty() || image_name.find('/') != std::string_view::npos ||
        image_name.find('\\') != std::string_view::npos || image_name.find("..") != std::string_view::npos)
        return std::nullopt;
    const auto path = image_root_ / std::string(image_name);
    const auto media = media_type_for_path(path);
    if (media.empty())
        return std::nullopt;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        return std::nullopt;
    try {
        return ImageData(read_file(path), media);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string Catalog::display_title(const RecordDescriptor& record) const
{
    if (const auto* c = find_collection(record.collection_name))
        return derive_title(record, *c);
    return record.title;
}

const HnswIndex& StoreIndexes::vector(VectorField field) const
{
    switch (field) {
    case VectorField::record_image: return record_image;
    case VectorField::record_title: return record_title;
    case VectorField::collection_title: return collection_title;
    case VectorField::collection_description: return collection_description;
    }
    throw Error(ErrorKind::invalid_argument, "unknown vector field");
}

namespace {

template <typename T>
std::string jsonl(const std::vector<T>& items)
{
    std::string out;
    for (const auto& item : items) {
        out += json(item).dump();
        out += '\n';
    }
    return out;
}

template <typename T>
std::vector<T> parse_jsonl(const std::string& text, const std::string& what)
{
    std::vector<T> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::corrupt_file, what + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::string read_verified(const std::filesystem::path& dir, const std::string& name, const json& files)
{
    const auto path = dir / name;
    if (!std::filesystem::exists(path))
        throw Error(ErrorKind::not_found, "store file missing: " + path.string());
    auto bytes = read_file(path);
    if (!files.contains(name))
        throw Error(ErrorKind::corrupt_file, "manifest.lock has no checksum for " + name);
    if (sha256_hex(bytes) != files[name].get<std::string>())
        throw Error(ErrorKind::corrupt_file, "checksum mismatch for " + path.string());
    return bytes;
}

} // namespace

std::string to_jsonl(const std::vector<RecordDescriptor>& records)
{
    return jsonl(records);
}

std::string to_jsonl(const std::vector<CollectionDescriptor>& collections)
{
    return jsonl(collections);
}

Store open_store(const std::filesystem::path& dir)
{
    const auto lock_path = dir / lock_file;
    if (!std::filesystem::is_directory(dir) || !std::filesystem::exists(lock_path))
        throw Error(ErrorKind::not_found, "no store at " + dir.string());
    auto lock = json::parse(read_file(lock_path), nullptr, false);
    if (lock.is_discarded() || !lock.is_object() || !lock.contains("files") || !lock["files"].is_object())
        throw Error(ErrorKind::corrupt_file, "manifest.lock is not valid");
    if (lock.value("format", 0) != 1)
        throw Error(ErrorKind::version_mismatch, "unsupported store format " + lock.value("format", json()).dump());
    const auto& files = lock["files"];

    auto collections = parse_jsonl<CollectionDescriptor>(read_verified(dir, std::string(collections_file), files),
                                                         std::string(collections_file));
    auto records =
        parse_jsonl<RecordDescriptor>(read_verified(dir, std::string(records_file), files), std::string(records_file));

    auto load_hnsw = [&](VectorField f) {
        return HnswIndex::deserialize(read_verified(dir, std::string(index_file_name(f)), files));
    };
    StoreIndexes indexes{load_hnsw(VectorField::record_image), load_hnsw(VectorField::record_title),
                         load_hnsw(VectorField::collection_title),
                         load_hnsw(VectorField::collection_description),
                         Bm25Index::deserialize(read_verified(dir, std::string(bm25_file), files))};

    return Store{Catalog(std::move(collections), std::move(records), dir / images_dir), std::move(indexes),
                 std::move(lock)};
}

} // namespace exhibit
