// SPDX-License-Identifier: Apache-2.0
#include "exhibit/error.hpp"
#include "exhibit/hnsw_index.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <deque>
#include <random>
#include <set>

using namespace exhibit;

namespace {

MuragId id_of(std::size_t i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%06zu", i);
    return MuragId(buf);
}

struct Corpus {
    std::vector<std::pair<MuragId, EmbeddingVector>> entries;
    HnswIndex index;
};

Corpus random_corpus(std::size_t n, std::size_t dim, std::uint64_t seed, HnswParams params = {})
{
    std::mt19937_64 rng(seed);
    Corpus c{{}, HnswIndex(dim, params)};
    for (std::size_t i = 0; i < n; ++i) {
        c.entries.emplace_back(id_of(i), oracle::random_unit(rng, dim));
        c.index.insert(c.entries.back().first, c.entries.back().second);
    }
    return c;
}

EmbeddingVector unit(std::vector<float> v)
{
    return EmbeddingVector::normalized(std::move(v));
}

double recall(const Corpus& c, std::size_t queries, std::size_t ef, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    double total = 0;
    for (std::size_t q = 0; q < queries; ++q) {
        const auto query = oracle::random_unit(rng, c.index.dimension());
        const auto truth = oracle::brute_force(c.entries, query, 10);
        const auto got = c.index.search(query, 10, ef);
        std::set<MuragId> want;
        for (const auto& h : truth)
            want.insert(h.id);
        std::size_t hit = 0;
        for (const auto& h : got)
            hit += want.count(h.id);
        total += static_cast<double>(hit) / 10.0;
    }
    return total / static_cast<double>(queries);
}

} // namespace

TEST_CASE("self-similarity of a single entry")
{
    HnswIndex index(3);
    const auto v = unit({1, 2, 3});
    index.insert(MuragId("a"), v);
    const auto hits = index.search(v, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == MuragId("a"));
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a single candidate is returned even when k is larger")
{
    HnswIndex index(2);
    const auto a = unit({1, 0});
    index.insert(MuragId("a"), a);
    const auto q = unit({1, 1});
    const auto hits = index.search(q, 3);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].score == doctest::Approx(oracle::dot(q, a.components())).epsilon(1e-12));
}

TEST_CASE("orthonormal basis scores exactly")
{
    HnswIndex index(3);
    index.insert(MuragId("e1"), unit({1, 0, 0}));
    index.insert(MuragId("e2"), unit({0, 1, 0}));
    index.insert(MuragId("e3"), unit({0, 0, 1}));
    const auto hits = index.search(unit({1, 0, 0}), 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == MuragId("e1"));
    CHECK(hits[0].score == 1.0);
    CHECK(hits[1].score == 0.0);
    CHECK(hits[2].score == 0.0);
    // equal scores fall back to id order
    CHECK(hits[1].id == MuragId("e2"));
    CHECK(hits[2].id == MuragId("e3"));
}

TEST_CASE("insert and search preconditions")
{
    HnswIndex index(3);
    CHECK_THROWS_AS(index.search(unit({1, 0, 0}), 1), Error);
    try {
        index.search(unit({1, 0, 0}), 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_index);
    }
    index.insert(MuragId("a"), unit({1, 0, 0}));
    try {
        index.insert(MuragId("b"), unit({1, 0}));
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension_mismatch);
    }
    try {
        index.insert(MuragId("a"), unit({0, 1, 0}));
        FAIL("expected duplicate id");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_id);
    }
    try {
        index.search(unit({1, 0}), 1);
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension_mismatch);
    }
    CHECK_THROWS_AS(index.search(unit({1, 0, 0}), 0), Error);
}

TEST_CASE("parameter validation")
{
    CHECK_THROWS_AS((HnswParams{1, 200, 100, 0}.validate()), Error);
    CHECK_THROWS_AS((HnswParams{16, 8, 100, 0}.validate()), Error);
    CHECK_THROWS_AS((HnswParams{16, 200, 0, 0}.validate()), Error);
    CHECK_NOTHROW(HnswParams{}.validate());
}

TEST_CASE("structure of a 1000-node graph")
{
    const auto c = random_corpus(1000, 16, 11);
    const auto& index = c.index;
    CHECK(index.size() == 1000);
    const auto M = index.params().M;

    for (std::uint32_t n = 0; n < index.size(); ++n) {
        CHECK(index.neighbors(n, 0).size() <= 2 * M);
        for (int l = 1; l <= index.level_of(n); ++l)
            CHECK(index.neighbors(n, l).size() <= M);
    }

    // every node on layer l is reachable from the entry point within layer l
    const auto entry = index.entry_point();
    REQUIRE(entry);
    for (int layer = 0; layer <= index.max_level(); ++layer) {
        std::set<std::uint32_t> on_layer;
        for (std::uint32_t n = 0; n < index.size(); ++n)
            if (index.primary_of(n) == n && index.level_of(n) >= layer)
                on_layer.insert(n);
        std::set<std::uint32_t> seen{*entry};
        std::deque<std::uint32_t> queue{*entry};
        while (!queue.empty()) {
            const auto n = queue.front();
            queue.pop_front();
            for (auto m : index.neighbors(n, layer))
                if (seen.insert(m).second)
                    queue.push_back(m);
        }
        CHECK(seen == on_layer);
    }
}

TEST_CASE("runs of identical vectors stay reachable")
{
    // 40 distinct vectors, each inserted 25 times under different ids
    std::mt19937_64 rng(3);
    std::vector<EmbeddingVector> distinct;
    for (int i = 0; i < 40; ++i)
        distinct.push_back(oracle::random_unit(rng, 16));
    std::vector<std::pair<MuragId, EmbeddingVector>> entries;
    HnswIndex index(16);
    for (std::size_t i = 0; i < 1000; ++i) {
        entries.emplace_back(id_of(i), distinct[i % distinct.size()]);
        index.insert(entries.back().first, entries.back().second);
    }
    std::size_t primaries = 0;
    for (std::uint32_t n = 0; n < index.size(); ++n) {
        primaries += index.primary_of(n) == n;
        if (index.primary_of(n) != n) {
            CHECK(index.neighbors(n, 0).empty());
            CHECK(std::ranges::equal(index.vector_at(n), index.vector_at(index.primary_of(n))));
        }
    }
    CHECK(primaries == distinct.size());

    CHECK(index.search(distinct[0], 1000, 1000).size() == 1000);
    for (int q = 0; q < 20; ++q) {
        const auto query = oracle::random_unit(rng, 16);
        CHECK(index.search(query, 30, 1000) == oracle::brute_force(entries, query, 30));
    }
    const auto back = HnswIndex::deserialize(index.serialize());
    CHECK(back.serialize() == index.serialize());
    const auto query = oracle::random_unit(rng, 16);
    CHECK(back.search(query, 60, 1000) == index.search(query, 60, 1000));
    auto grown = HnswIndex::deserialize(index.serialize());
    grown.insert(MuragId("extra"), distinct[5]);
    CHECK(grown.primary_of(1000) == 5);
}

TEST_CASE("reported scores are exact cosines")
{
    const auto c = random_corpus(2000, 24, 5);
    std::mt19937_64 rng(99);
    for (int q = 0; q < 50; ++q) {
        const auto query = oracle::random_unit(rng, 24);
        for (const auto& h : c.index.search(query, 10)) {
            const auto& v = c.entries[std::stoul(h.id.value().substr(1))].second;
            CHECK(std::abs(h.score - oracle::dot(query, v.components())) <= 1e-6);
        }
    }
}

TEST_CASE("results are ranked and of length min(k, size)")
{
    const auto c = random_corpus(30, 8, 2);
    std::mt19937_64 rng(4);
    const auto q = oracle::random_unit(rng, 8);
    CHECK(c.index.search(q, 5).size() == 5);
    const auto all = c.index.search(q, 100);
    CHECK(all.size() == 30);
    CHECK(std::ranges::is_sorted(all, ranks_before));
    // beam covering the whole graph returns the exhaustive ranking
    CHECK(all == oracle::brute_force(c.entries, q, 100));
}

TEST_CASE("recall at 5000 vectors stays above 0.95")
{
    const auto c = random_corpus(5000, 32, 21);
    CHECK(recall(c, 40, 200, 77) >= 0.95);
}

TEST_CASE("recall is non-decreasing in ef_search")
{
    const auto c = random_corpus(3000, 32, 8, HnswParams{8, 40, 10, 42});
    double previous = 0;
    for (std::size_t ef : {10, 20, 40, 80, 160, 320}) {
        const double r = recall(c, 40, ef, 5);
        CHECK(r >= previous - 1e-12);
        previous = r;
    }
    CHECK(previous >= 0.95);
}

TEST_CASE("identical inputs give identical graphs and rankings")
{
    const auto a = random_corpus(500, 16, 3);
    const auto b = random_corpus(500, 16, 3);
    CHECK(a.index.serialize() == b.index.serialize());
    std::mt19937_64 rng(1);
    const auto q = oracle::random_unit(rng, 16);
    CHECK(a.index.search(q, 10) == b.index.search(q, 10));

    const auto other_seed = random_corpus(500, 16, 3, HnswParams{16, 200, 100, 7});
    CHECK(other_seed.index.serialize() != a.index.serialize());
}

TEST_CASE("persist and load round-trip is bit-identical")
{
    testing::TempDir dir;
    const auto c = random_corpus(1000, 16, 12);
    c.index.persist(dir / "i.idx");
    const auto loaded = HnswIndex::load(dir / "i.idx");
    CHECK(loaded.size() == 1000);
    CHECK(loaded.params() == c.index.params());
    CHECK(loaded.serialize() == c.index.serialize());
    std::mt19937_64 rng(20);
    for (int q = 0; q < 20; ++q) {
        const auto query = oracle::random_unit(rng, 16);
        CHECK(loaded.search(query, 10) == c.index.search(query, 10));
    }
}

TEST_CASE("corrupt snapshots are rejected")
{
    const auto c = random_corpus(50, 8, 1);
    const auto bytes = c.index.serialize();
    auto kind_of = [](std::string_view b) {
        try {
            HnswIndex::deserialize(b);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;
    };
    CHECK(kind_of(std::string_view(bytes).substr(0, bytes.size() / 2)) == ErrorKind::corrupt_file);
    CHECK(kind_of("") == ErrorKind::corrupt_file);
    auto flipped = bytes;
    flipped[flipped.size() - 5] ^= 0x40;
    CHECK(kind_of(flipped) == ErrorKind::corrupt_file);
    auto garbage = bytes;
    garbage[0] = 'X';
    CHECK(kind_of(garbage) == ErrorKind::corrupt_file);
    auto future = bytes;
    future[8] = 9; // version field follows the 8-byte magic
    CHECK(kind_of(future) == ErrorKind::version_mismatch);
}

TEST_CASE("empty index round-trips and still refuses searches")
{
    testing::TempDir dir;
    HnswIndex empty(4);
    empty.persist(dir / "e.idx");
    const auto loaded = HnswIndex::load(dir / "e.idx");
    CHECK(loaded.empty());
    CHECK(loaded.dimension() == 4);
    CHECK_THROWS_AS(loaded.search(unit({1, 0, 0, 0}), 1), Error);
}
