// SPDX-License-Identifier: Apache-2.0
#include "exhibit/hnsw_index.hpp"

#include "binary_io.hpp"
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <queue>

namespace exhibit {

namespace {

constexpr std::string_view magic{"EXHNSW\0\0", 8};
constexpr std::uint32_t no_entry = 0xffffffffu;
constexpr int level_cap = 30;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

void HnswParams::validate() const
{
    if (M < 2)
        throw Error(ErrorKind::invalid_argument, "HNSW M must be >= 2");
    if (ef_construction < M)
        throw Error(ErrorKind::invalid_argument, "HNSW ef_construction must be >= M");
    if (ef_search < 1)
        throw Error(ErrorKind::invalid_argument, "HNSW ef_search must be >= 1");
}

HnswIndex::HnswIndex(std::size_t dimension, HnswParams params)
    : dimension_(dimension), params_(params)
{
    if (dimension_ == 0)
        throw Error(ErrorKind::invalid_argument, "HNSW dimension must be positive");
    params_.validate();
}

std::optional<std::uint32_t> HnswIndex::entry_point() const
{
    if (ids_.empty())
        return std::nullopt;
    return entry_;
}

std::span<const std::uint32_t> HnswIndex::neighbors(std::uint32_t node, int layer) const
{
    const auto& layers = links_.at(node);
    if (layer < 0 || layer >= static_cast<int>(layers.size()))
        return {};
    return layers[static_cast<std::size_t>(layer)];
}

std::span<const float> HnswIndex::vector_at(std::uint32_t node) const
{
    if (node >= ids_.size())
        throw Error(ErrorKind::invalid_argument, "node out of range");
    return {data(node), dimension_};
}

double HnswIndex::similarity(const float* a, const float* b) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i)
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

std::uint64_t HnswIndex::vector_hash(const float* v) const
{
    return std::hash<std::string_view>{}({reinterpret_cast<const char*>(v), dimension_ * sizeof(float)});
}

std::optional<std::uint32_t> HnswIndex::find_identical(const float* v) const
{
    auto [lo, hi] = by_vector_.equal_range(vector_hash(v));
    for (auto it = lo; it != hi; ++it)
        if (std::memcmp(data(it->second), v, dimension_ * sizeof(float)) == 0)
            return it->second;
    return std::nullopt;
}

int HnswIndex::draw_level(std::uint32_t node) const
{
    const std::uint64_t bits = splitmix64(params_.seed ^ splitmix64(node));
    // uniform in (0, 1]
    const double u = static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    const double ml = 1.0 / std::log(static_cast<double>(params_.M));
    return std::min(level_cap, static_cast<int>(std::floor(-std::log(u) * ml)));
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(const float* query,
                                                          const std::vector<Candidate>& entry,
                                                          std::size_t ef, int layer) const
{
    // Total order: higher similarity first, lower node index on ties.
    auto better = [](const Candidate& a, const Candidate& b) {
        return a.similarity > b.similarity || (a.similarity == b.similarity && a.node < b.node);
    };
    auto best_on_top = [&](const Candidate& a, const Candidate& b) { return better(b, a); };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(best_on_top)> frontier(best_on_top);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(better)> results(better);

    std::vector<bool> visited(ids_.size(), false);
    for (const auto& c : entry) {
        if (visited[c.node])
            continue;
        visited[c.node] = true;
        frontier.push(c);
        results.push(c);
        if (results.size() > ef)
            results.pop();
    }

    while (!frontier.empty()) {
        const Candidate current = frontier.top();
        if (better(results.top(), current) && results.size() >= ef)
            break;
        frontier.pop();

        for (std::uint32_t next : neighbors(current.node, layer)) {
            if (visited[next])
                continue;
            visited[next] = true;
            Candidate cand{similarity(query, data(next)), next};
            if (results.size() < ef || better(cand, results.top())) {
                frontier.push(cand);
                results.push(cand);
                if (results.size() > ef)
                    results.pop();
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::ranges::reverse(out);
    return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(const std::vector<Candidate>& candidates,
                                                       std::size_t max_count) const
{
    // Keep a candidate only if it is closer to the base point than to every
    // neighbor already selected; candidates arrive best-first.
    std::vector<std::uint32_t> selected;
    for (const auto& cand : candidates) {
        if (selected.size() >= max_count)
            break;
        bool keep = true;
        for (std::uint32_t s : selected) {
            if (similarity(data(cand.node), data(s)) > cand.similarity) {
                keep = false;
                break;
            }
        }
        if (keep)
            selected.push_back(cand.node);
    }
    return selected;
}

void HnswIndex::shrink_links(std::uint32_t node, int layer, std::size_t max_count)
{
    auto& links = links_[node][static_cast<std::size_t>(layer)];
    std::vector<Candidate> cands;
    cands.reserve(links.size());
    for (std::uint32_t n : links)
        cands.push_back({similarity(data(node), data(n)), n});
    std::ranges::sort(cands, [](const Candidate& a, const Candidate& b) {
        return a.similarity > b.similarity || (a.similarity == b.similarity && a.node < b.node);
    });
    links = select_neighbors(cands, max_count);
}

void HnswIndex::insert(const IndexEntry& entry)
{
    if (entry.vector.dimension() != dimension_)
        throw Error(ErrorKind::dimension_mismatch,
                    "vector dimension " + std::to_string(entry.vector.dimension()) +
                        " does not match index dimension " + std::to_string(dimension_));
    if (by_id_.contains(entry.id.value()))
        throw Error(ErrorKind::duplicate_id, "duplicate id " + entry.id.value());
    if (ids_.size() >= no_entry)
        throw Error(ErrorKind::invalid_argument, "HNSW index is full");

    const auto node = static_cast<std::uint32_t>(ids_.size());
    auto comps = entry.vector.components();
    const auto twin_of = find_identical(comps.data());
    const int level = twin_of ? 0 : draw_level(node);

    ids_.push_back(entry.id);
    by_id_.emplace(entry.id.value(), node);
    vectors_.insert(vectors_.end(), comps.begin(), comps.end());
    links_.emplace_back(static_cast<std::size_t>(level) + 1);
    twins_.emplace_back();
    if (twin_of) {
        primary_.push_back(*twin_of);
        twins_[*twin_of].push_back(node);
        return;
    }
    primary_.push_back(node);
    by_vector_.emplace(vector_hash(data(node)), node);

    if (node == 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }

    const float* q = data(node);
    std::vector<Candidate> eps{{similarity(q, data(entry_)), entry_}};
    for (int l = max_level_; l > level; --l)
        eps = search_layer(q, eps, 1, l);

    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto found = search_layer(q, eps, params_.ef_construction, l);
        auto chosen = select_neighbors(found, params_.M);
        links_[node][static_cast<std::size_t>(l)] = chosen;
        for (std::uint32_t nb : chosen) {
            auto& back = links_[nb][static_cast<std::size_t>(l)];
            back.push_back(node);
            if (back.size() > max_links(l))
                shrink_links(nb, l, max_links(l));
        }
        eps = std::move(found);
    }

    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

std::vector<SearchHit> HnswIndex::search(const EmbeddingVector& query, std::size_t k,
                                         std::optional<std::size_t> ef) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    if (ids_.empty())
        throw Error(ErrorKind::empty_index, "search on empty index");
    if (query.dimension() != dimension_)
        throw Error(ErrorKind::dimension_mismatch,
                    "query dimension " + std::to_string(query.dimension()) +
                        " does not match index dimension " + std::to_string(dimension_));

    const float* q = query.components().data();
    const std::size_t beam = std::max<std::size_t>(ef.value_or(params_.ef_search), k);

    std::vector<Candidate> eps{{similarity(q, data(entry_)), entry_}};
    for (int l = max_level_; l > 0; --l)
        eps = search_layer(q, eps, 1, l);
    auto found = search_layer(q, eps, beam, 0);

    std::vector<SearchHit> hits;
    hits.reserve(found.size());
    for (const auto& c : found) {
        hits.push_back({ids_[c.node], c.similarity});
        for (std::uint32_t t : twins_[c.node])
            hits.push_back({ids_[t], c.similarity});
    }
    sort_hits(hits);
    if (hits.size() > k)
        hits.resize(k);
    return hits;
}

// Snapshot layout (all integers little-endian):
//   header  : magic[8] "EXHNSW\0\0", u32 version, u32 dimension, u32 M,
//             u32 ef_construction, u32 ef_search, u64 seed, u64 count,
//             u8[32] sha256(payload)
//   payload : i32 max_level, u32 entry (0xffffffff when empty), then per node
//             str id, u32 primary, f32[dimension], u32 level, per layer
//             0..level u32 degree + u32[degree] neighbors
std::string HnswIndex::serialize() const
{
    detail::ByteWriter payload;
    payload.i32(max_level_);
    payload.u32(ids_.empty() ? no_entry : entry_);
    for (std::uint32_t n = 0; n < ids_.size(); ++n) {
        payload.str(ids_[n].value());
        payload.u32(primary_[n]);
        for (float x : vector_at(n))
            payload.f32(x);
        const auto& layers = links_[n];
        payload.u32(static_cast<std::uint32_t>(layers.size() - 1));
        for (const auto& layer : layers) {
            payload.u32(static_cast<std::uint32_t>(layer.size()));
            for (std::uint32_t nb : layer)
                payload.u32(nb);
        }
    }

    detail::ByteWriter out;
    out.raw(magic);
    out.u32(format_version);
    out.u32(static_cast<std::uint32_t>(dimension_));
    out.u32(params_.M);
    out.u32(params_.ef_construction);
    out.u32(params_.ef_search);
    out.u64(params_.seed);
    out.u64(ids_.size());
    auto digest = sha256(payload.bytes());
    out.raw({reinterpret_cast<const char*>(digest.data()), digest.size()});
    out.raw(payload.bytes());
    return out.take();
}

HnswIndex HnswIndex::deserialize(std::string_view bytes)
{
    detail::ByteReader in(bytes);
    if (in.raw(magic.size()) != magic)
        throw Error(ErrorKind::corrupt_file, "not an HNSW snapshot");
    const auto version = in.u32();
    if (version != format_version)
        throw Error(ErrorKind::version_mismatch,
                    "HNSW snapshot version " + std::to_string(version) + ", expected " +
                        std::to_string(format_version));
    const auto dimension = in.u32();
    HnswParams params;
    params.M = in.u32();
    params.ef_construction = in.u32();
    params.ef_search = in.u32();
    params.seed = in.u64();
    const auto count = in.u64();
    auto stored_digest = in.raw(32);
    auto payload_bytes = bytes.substr(in.position());
    auto digest = sha256(payload_bytes);
    if (stored_digest != std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()))
        throw Error(ErrorKind::corrupt_file, "HNSW snapshot checksum mismatch");

    HnswIndex index(dimension, params);
    detail::ByteReader p(payload_bytes);
    index.max_level_ = p.i32();
    const auto entry = p.u32();
    index.ids_.reserve(count);
    index.vectors_.reserve(count * dimension);
    index.links_.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        MuragId id(p.str());
        if (!index.by_id_.emplace(id.value(), static_cast<std::uint32_t>(n)).second)
            throw Error(ErrorKind::corrupt_file, "duplicate id in HNSW snapshot");
        index.ids_.push_back(std::move(id));
        const auto primary = p.u32();
        const bool twin = primary != n;
        if (primary > n || (twin && index.primary_[primary] != primary))
            throw Error(ErrorKind::corrupt_file, "HNSW twin points at a non-primary node");
        for (std::uint32_t i = 0; i < dimension; ++i)
            index.vectors_.push_back(p.f32());
        index.primary_.push_back(primary);
        index.twins_.emplace_back();
        if (twin)
            index.twins_[primary].push_back(static_cast<std::uint32_t>(n));
        else
            index.by_vector_.emplace(index.vector_hash(index.data(static_cast<std::uint32_t>(n))),
                                     static_cast<std::uint32_t>(n));
        const auto level = p.u32();
        if (level > static_cast<std::uint32_t>(level_cap) || (twin && level != 0))
            throw Error(ErrorKind::corrupt_file, "HNSW node level out of range");
        std::vector<std::vector<std::uint32_t>> layers(level + 1);
        for (auto& layer : layers) {
            const auto degree = p.u32();
            layer.reserve(degree);
            for (std::uint32_t d = 0; d < degree; ++d) {
                const auto nb = p.u32();
                if (nb >= count)
                    throw Error(ErrorKind::corrupt_file, "HNSW neighbor out of range");
                if (twin)
                    throw Error(ErrorKind::corrupt_file, "HNSW twin node has links");
                layer.push_back(nb);
            }
        }
        index.links_.push_back(std::move(layers));
    }
    if (p.remaining() != 0)
        throw Error(ErrorKind::corrupt_file, "trailing bytes in HNSW snapshot");
    for (const auto& layers : index.links_)
        for (const auto& layer : layers)
            for (std::uint32_t nb : layer)
                if (index.primary_[nb] != nb)
                    throw Error(ErrorKind::corrupt_file, "HNSW link to a twin node");
    if (count == 0) {
        if (entry != no_entry)
            throw Error(ErrorKind::corrupt_file, "entry point in empty HNSW snapshot");
    } else {
        if (entry >= count || index.primary_[entry] != entry)
            throw Error(ErrorKind::corrupt_file, "HNSW entry point out of range");
        index.entry_ = entry;
    }
    return index;
}

void HnswIndex::persist(const std::filesystem::path& path) const
{
    write_file(path, serialize());
}

HnswIndex HnswIndex::load(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorKind::not_found, "no HNSW snapshot at " + path.string());
    return deserialize(read_file(path));
}

} // namespace exhibit
