// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/bm25_index.hpp"
#include "exhibit/domain.hpp"
#include "exhibit/hnsw_index.hpp"
#include "exhibit/images.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace exhibit {

struct CorpusStats {
    std::size_t total_records = 0;
    std::size_t total_collections = 0;
    std::map<std::string, std::size_t> records_per_collection;

    bool operator==(const CorpusStats&) const = default;
};

void to_json(nlohmann::json& j, const CorpusStats& s);

enum class VectorField { record_image, record_title, collection_title, collection_description };

inline constexpr VectorField all_vector_fields[] = {VectorField::record_image, VectorField::record_title,
                                                    VectorField::collection_title,
                                                    VectorField::collection_description};

/// "hnsw_image.idx", "hnsw_rtitle.idx", "hnsw_ctitle.idx", "hnsw_cdesc.idx".
std::string_view index_file_name(VectorField field);

inline constexpr std::string_view records_file = "records.db";
inline constexpr std::string_view collections_file = "collections.db";
inline constexpr std::string_view bm25_file = "bm25.idx";
inline constexpr std::string_view lock_file = "manifest.lock";
inline constexpr std::string_view images_dir = "images";

/// Lexical document ids for the two collection text fields.
std::string collection_title_doc(const MuragId& collection);
std::string collection_description_doc(const MuragId& collection);

/// Read-only record/collection lookup plus image access.
class Catalog {
public:
    Catalog() = default;
    /// Errors: duplicate_id for repeated murag_id or collection_name.
    Catalog(std::vector<CollectionDescriptor> collections, std::vector<RecordDescriptor> records,
            std::filesystem::path image_root = {});

    const RecordDescriptor* find_record(const MuragId& id) const;
    const RecordDescriptor* find_record(std::string_view id) const;
    /// Accepts a collection_name or a collection murag_id.
    const CollectionDescriptor* find_collection(std::string_view name_or_id) const;

    /// Errors: not_found naming the id.
    const RecordDescriptor& get_record(std::string_view id) const;
    const CollectionDescriptor& get_collection(std::string_view name_or_id) const;

    /// Sorted by collection_name.
    std::vector<CollectionDescriptor> list_collections() const;
    CorpusStats stats() const;

    const std::vector<RecordDescriptor>& records() const noexcept { return records_; }
    const std::vector<CollectionDescriptor>& collections() const noexcept { return collections_; }
    const std::filesystem::path& image_root() const noexcept { return image_root_; }

    /// Reads image_root/name. Names containing path separators or ".." are
    /// refused. nullopt when absent or of unsupported type.
    std::optional<ImageData> load_image(std::string_view image_name) const;

    /// derive_title with the record's collection, or record.title if the
    /// collection is unknown.
    std::string display_title(const RecordDescriptor& record) const;

private:
    std::vector<CollectionDescriptor> collections_;
    std::vector<RecordDescriptor> records_;
    std::filesystem::path image_root_;
    std::unordered_map<std::string, std::size_t> record_by_id_;
    std::unordered_map<std::string, std::size_t> collection_by_key_;
};

struct StoreIndexes {
    HnswIndex record_image;
    HnswIndex record_title;
    HnswIndex collection_title;
    HnswIndex collection_description;
    Bm25Index lexical;

    const HnswIndex& vector(VectorField field) const;
};

/// A loaded store directory.
struct Store {
    Catalog catalog;
    StoreIndexes indexes;
    /// Parsed manifest.lock.
    nlohmann::json lock;

    std::size_t dimension() const { return indexes.record_title.dimension(); }
};

/// Loads `dir` (layout: records.db, collections.db, hnsw_*.idx, bm25.idx,
/// manifest.lock, images/) and verifies every checksum listed in the lock.
/// Errors: not_found (missing directory or file), corrupt_file (checksum
/// mismatch or unparsable content), version_mismatch.
Store open_store(const std::filesystem::path& dir);

/// JSON-lines serialization used for records.db and collections.db.
std::string to_jsonl(const std::vector<RecordDescriptor>& records);
std::string to_jsonl(const std::vector<CollectionDescriptor>& collections);

} // namespace exhibit
