// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/bm25_index.hpp"
#include "exhibit/embedding.hpp"
#include "exhibit/hnsw_index.hpp"
#include "exhibit/store.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace exhibit {

/// One parsed manifest line.
struct ManifestEntry {
    std::size_t line = 0;
    nlohmann::json body;
};

/// JSON-lines corpus manifest. Lines carry a "kind" of "manifest" (optional
/// header with "image_root", relative to the manifest file), "collection" or
/// "record". Blank lines are skipped.
struct CorpusManifest {
    std::filesystem::path image_root;
    std::vector<ManifestEntry> collections;
    std::vector<ManifestEntry> records;
};

/// Errors: manifest_not_found, manifest_parse (invalid JSON, unknown kind).
CorpusManifest read_manifest(const std::filesystem::path& path);

struct Rejection {
    std::string kind; // "collection" | "record"
    std::size_t line = 0;
    std::string key;  // collection_name or catalogno/image_name
    std::vector<std::string> violations;
};

struct IngestConfig {
    HnswParams hnsw;
    Bm25Params bm25;
    std::size_t batch_size = 64;
    /// Recorded in manifest.lock ("stub" or "remote").
    std::string embedder_kind = "stub";
};

struct IngestReport {
    std::size_t collections_input = 0;
    std::size_t records_input = 0;
    std::size_t collections_accepted = 0;
    std::size_t records_accepted = 0;
    std::size_t images_indexed = 0;
    std::vector<Rejection> rejected;
    /// Seconds per built index, keyed by snapshot file name.
    std::map<std::string, double> build_seconds;
    /// SHA-256 per persisted file, keyed by path relative to the store.
    std::map<std::string, std::string> checksums;
    std::filesystem::path store;

    nlohmann::json to_json() const;
};

/// Embeds and indexes a catalog: record titles (display titles) and images,
/// collection titles and descriptions, plus the BM25 index. Records whose
/// image cannot be loaded are left out of the image index only.
StoreIndexes build_indexes(const Catalog& catalog, EmbeddingProvider& embedder, const IngestConfig& config,
                           std::map<std::string, double>* build_seconds = nullptr);

/// Validates the manifest entry by entry, builds every index and writes the
/// store to `out_dir` atomically (build in a sibling temp directory, then
/// swap). Bad entries are rejected and reported; provider failures abort the
/// run and leave no partial output.
/// Errors: manifest_not_found, manifest_parse, provider errors, io (out_dir
/// exists and is not a store).
IngestReport ingest(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                    EmbeddingProvider& embedder, const IngestConfig& config = {});

struct FixtureCorpus {
    std::vector<CollectionDescriptor> collections;
    std::vector<RecordDescriptor> records;
    /// image_name -> PNG bytes
    std::map<std::string, std::string> images;
};

/// Deterministic synthetic corpus: themed collections, records assigned
/// round-robin, small patterned PNG placeholders. Murag ids are filled in.
/// Errors: invalid_argument unless n_records >= n_collections >= 1.
FixtureCorpus generate_fixture(std::uint64_t seed, std::size_t n_collections, std::size_t n_records);

/// Writes manifest.jsonl and images/ under `dir`; returns the manifest path.
std::filesystem::path write_fixture(const FixtureCorpus& corpus, const std::filesystem::path& dir);

/// Manifest text for a corpus (header line, then collections, then records).
std::string fixture_manifest(const FixtureCorpus& corpus);

} // namespace exhibit
