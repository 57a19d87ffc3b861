// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/domain.hpp"
#include "exhibit/search_hit.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace exhibit {

struct HnswParams {
    std::uint32_t M = 16;
    std::uint32_t ef_construction = 200;
    std::uint32_t ef_search = 100;
    std::uint64_t seed = 42;

    /// Throws Error(invalid_argument) unless M >= 2, ef_construction >= M and
    /// ef_search >= 1.
    void validate() const;
    bool operator==(const HnswParams&) const = default;
};

struct IndexEntry {
    MuragId id;
    EmbeddingVector vector;
};

/// Hierarchical navigable small-world graph over unit vectors, scored by
/// cosine (dot product of normalized vectors).
///
/// Layer 0 holds every node with up to 2*M links; upper layers hold up to M.
/// Node levels come from a counter-based hash of (seed, insertion index), so
/// the graph is a pure function of the params and the insertion order.
/// Reported scores are always the exact dot product of the query with the
/// stored vector; only the candidate set is approximate.
///
/// An entry whose vector is bit-identical to an earlier one becomes a twin of
/// that entry's node: it gets no links of its own and is reported whenever
/// the node is found. Without this, runs of equal vectors fill each other's
/// link lists and cut themselves off from the rest of the graph.
///
/// Build is single-writer. After build, `search` is const and safe for any
/// number of concurrent readers.
class HnswIndex {
public:
    static constexpr std::uint32_t format_version = 2;

    explicit HnswIndex(std::size_t dimension, HnswParams params = {});

    /// Errors: duplicate_id, dimension_mismatch.
    void insert(const IndexEntry& entry);
    void insert(const MuragId& id, const EmbeddingVector& vector) { insert(IndexEntry{id, vector}); }

    /// Returns min(k, size()) hits in ranked order. `ef` overrides the
    /// configured ef_search; the effective beam is max(ef, k).
    /// Errors: empty_index, dimension_mismatch, invalid_argument (k == 0).
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k,
                                  std::optional<std::size_t> ef = std::nullopt) const;

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    std::size_t dimension() const noexcept { return dimension_; }
    const HnswParams& params() const noexcept { return params_; }
    bool contains(const MuragId& id) const { return by_id_.contains(id.value()); }

    // Graph introspection, used by structural checks.
    int max_level() const noexcept { return max_level_; }
    std::optional<std::uint32_t> entry_point() const;
    int level_of(std::uint32_t node) const { return static_cast<int>(links_.at(node).size()) - 1; }
    std::span<const std::uint32_t> neighbors(std::uint32_t node, int layer) const;
    const MuragId& id_at(std::uint32_t node) const { return ids_.at(node); }
    /// The graph node carrying `node`: itself unless it is a twin.
    std::uint32_t primary_of(std::uint32_t node) const { return primary_.at(node); }
    std::span<const float> vector_at(std::uint32_t node) const;

    std::string serialize() const;
    /// Errors: corrupt_file (bad magic, truncation, checksum mismatch),
    /// version_mismatch.
    static HnswIndex deserialize(std::string_view bytes);

    void persist(const std::filesystem::path& path) const;
    static HnswIndex load(const std::filesystem::path& path);

private:
    struct Candidate {
        double similarity;
        std::uint32_t node;
    };

    const float* data(std::uint32_t node) const { return vectors_.data() + std::size_t(node) * dimension_; }
    double similarity(const float* a, const float* b) const;
    int draw_level(std::uint32_t node) const;
    std::vector<Candidate> search_layer(const float* query, const std::vector<Candidate>& entry,
                                        std::size_t ef, int layer) const;
    std::vector<std::uint32_t> select_neighbors(const std::vector<Candidate>& candidates,
                                                std::size_t max_count) const;
    void shrink_links(std::uint32_t node, int layer, std::size_t max_count);
    std::size_t max_links(int layer) const { return layer == 0 ? 2 * params_.M : params_.M; }
    std::uint64_t vector_hash(const float* v) const;
    std::optional<std::uint32_t> find_identical(const float* v) const;

    std::size_t dimension_;
    HnswParams params_;
    std::vector<MuragId> ids_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::vector<float> vectors_;
    // links_[node][layer] -> neighbor node indices
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::vector<std::uint32_t> primary_;
    std::vector<std::vector<std::uint32_t>> twins_;
    std::unordered_multimap<std::uint64_t, std::uint32_t> by_vector_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
};

} // namespace exhibit
