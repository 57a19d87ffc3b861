// SPDX-License-Identifier: Apache-2.0
#include "exhibit/bm25_index.hpp"
#include "exhibit/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace exhibit;
using Tokens = std::vector<std::string>;

namespace {

LexicalDoc doc(std::string id, std::string text, LexicalKind kind = LexicalKind::record_title)
{
    return {MuragId(std::move(id)), kind, std::move(text)};
}

const std::vector<std::string> vocabulary{"quartz", "crystal", "feldspar", "goose",  "bronze", "statue",
                                          "plinth", "mineral", "torso",    "beetle", "lens",   "coin",
                                          "silver", "herbarium", "fern",   "alps"};

std::string random_text(std::mt19937_64& rng, std::size_t max_len)
{
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> word(0, vocabulary.size() - 1);
    std::string out;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i)
        out += (i ? " " : "") + vocabulary[word(rng)];
    return out;
}

} // namespace

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics")
{
    CHECK(tokenize("Sanrománit (Mineral)") == Tokens{"sanrománit", "mineral"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("BM25-Index") == Tokens{"bm25", "index"});
    CHECK(tokenize("SANROMÁNIT") == Tokens{"sanrománit"});
    CHECK(tokenize("ΑΒΓ Щит") == Tokens{"αβγ", "щит"});
    CHECK(tokenize("  --  ").empty());
    CHECK(tokenize("a\xff" "b") == Tokens{"a", "b"});
}

TEST_CASE("hand-computed three-document example")
{
    // N = 3, avgdl = 4/3, df(quartz) = 2, idf = ln(1 + 1.5/2.5) = ln 1.6
    // d1: dl = 2 -> norm = 1 + 1.2 * (0.25 + 0.75 * 1.5)   = 2.65
    // d2: dl = 1 -> norm = 1 + 1.2 * (0.25 + 0.75 * 0.75)  = 1.975
    const double idf = 0.47000362924573563;
    const double d1 = idf * 2.2 / 2.65;
    const double d2 = idf * 2.2 / 1.975;
    CHECK(d1 == doctest::Approx(0.39019169220400696).epsilon(1e-12));
    CHECK(d2 == doctest::Approx(0.523548346501579).epsilon(1e-12));

    const auto index = Bm25Index::build({doc("d1", "quartz crystal"), doc("d2", "quartz"), doc("d3", "feldspar")},
                                        Bm25Params{1.2, 0.75});
    CHECK(index.average_length() == doctest::Approx(4.0 / 3.0));
    const auto hits = index.search("quartz", 10);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == MuragId("d2"));
    CHECK(hits[1].id == MuragId("d1"));
    CHECK(std::abs(hits[0].score - d2) <= 1e-6);
    CHECK(std::abs(hits[1].score - d1) <= 1e-6);
}

TEST_CASE("build bookkeeping and errors")
{
    const auto index = Bm25Index::build({doc("a", "one two"), doc("b", "two"), doc("c", "three three three")});
    CHECK(index.size() == 3);
    CHECK(index.average_length() == doctest::Approx(2.0));
    CHECK(index.document_frequency("two") == 2);
    CHECK(index.document_frequency("nine") == 0);
    CHECK(index.document_length(MuragId("c")) == 3);

    try {
        Bm25Index::build({doc("a", "x"), doc("a", "y")});
        FAIL("expected duplicate id");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_id);
    }
    CHECK_THROWS_AS(Bm25Index::build({}, Bm25Params{0.0, 0.5}), Error);
    CHECK_THROWS_AS(Bm25Index::build({}, Bm25Params{1.2, 1.5}), Error);
}

TEST_CASE("empty corpus and out-of-vocabulary queries match nothing")
{
    CHECK(Bm25Index::build({}).search("anything", 5).empty());
    const auto index = Bm25Index::build({doc("a", "quartz")});
    CHECK(index.search("zebra unicorn", 5).empty());
    CHECK(index.search("", 5).empty());
    CHECK_THROWS_AS(index.search("quartz", 0), Error);
}

TEST_CASE("k larger than the match count returns all matches without padding")
{
    const auto index = Bm25Index::build({doc("a", "goose"), doc("b", "goose statue"), doc("c", "fern")});
    CHECK(index.search("goose", 50).size() == 2);
    CHECK(index.search("goose", 1).size() == 1);
}

TEST_CASE("equal scores are ordered by id")
{
    const auto index = Bm25Index::build({doc("z", "coin"), doc("m", "coin"), doc("a", "coin")});
    const auto hits = index.search("coin", 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == MuragId("a"));
    CHECK(hits[1].id == MuragId("m"));
    CHECK(hits[2].id == MuragId("z"));
}

TEST_CASE("kind filter restricts results but not corpus statistics")
{
    const auto index = Bm25Index::build({doc("r1", "mineral sample"),
                                         doc("c1:title", "Mineral Collection", LexicalKind::collection_title),
                                         doc("c1:description", "minerals of the alps",
                                             LexicalKind::collection_description)});
    const auto only_titles = index.search("mineral", 10, std::set{LexicalKind::collection_title});
    REQUIRE(only_titles.size() == 1);
    CHECK(only_titles[0].id == MuragId("c1:title"));
    const auto all = index.search("mineral", 10);
    CHECK(all.size() == 2);
    for (const auto& h : all)
        if (h.id == only_titles[0].id)
            CHECK(h.score == only_titles[0].score);
}

TEST_CASE("scores equal the naive formula on random corpora")
{
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 40; ++round) {
        std::uniform_int_distribution<std::size_t> size(1, 100);
        const auto n = size(rng);
        const double k1 = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
        const double b = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::vector<LexicalDoc> docs;
        oracle::NaiveBm25 naive;
        naive.k1 = k1;
        naive.b = b;
        for (std::size_t i = 0; i < n; ++i) {
            auto text = random_text(rng, 8);
            docs.push_back(doc("d" + std::to_string(i), text));
            naive.docs.emplace_back("d" + std::to_string(i), oracle::ascii_terms(text));
        }
        const auto index = Bm25Index::build(docs, Bm25Params{k1, b});
        for (int q = 0; q < 5; ++q) {
            const auto query = random_text(rng, 3) + " unknownterm";
            const auto expected = naive.matches(query);
            const auto hits = index.search(query, 1000);
            REQUIRE(hits.size() == expected.size());
            CHECK(std::ranges::is_sorted(hits, ranks_before));
            for (const auto& h : hits) {
                REQUIRE(expected.contains(h.id.value()));
                CHECK(std::abs(h.score - expected.at(h.id.value())) <= 1e-6);
            }
        }
    }
}

TEST_CASE("adding a document leaves existing tokenization alone")
{
    std::vector<LexicalDoc> docs{doc("a", "Bronze goose statue"), doc("b", "Plinth of the goose statue")};
    const auto before = Bm25Index::build(docs);
    docs.push_back(doc("c", "goose goose goose"));
    const auto after = Bm25Index::build(docs);
    CHECK(before.document_length(MuragId("a")) == after.document_length(MuragId("a")));
    CHECK(before.document_length(MuragId("b")) == after.document_length(MuragId("b")));
}

TEST_CASE("search is pure and snapshots round-trip")
{
    testing::TempDir dir;
    const auto index = Bm25Index::build({doc("a", "quartz crystal"), doc("b", "quartz"),
                                         doc("c", "feldspar", LexicalKind::collection_description)},
                                        Bm25Params{1.5, 0.5});
    CHECK(index.search("quartz feldspar", 5) == index.search("quartz feldspar", 5));
    index.persist(dir / "bm25.idx");
    const auto loaded = Bm25Index::load(dir / "bm25.idx");
    CHECK(loaded.serialize() == index.serialize());
    CHECK(loaded.params() == index.params());
    CHECK(loaded.search("quartz feldspar", 5) == index.search("quartz feldspar", 5));
    CHECK(loaded.search("feldspar", 5, std::set{LexicalKind::record_title}).empty());

    auto bytes = index.serialize();
    auto kind_of = [](std::string_view b) {
        try {
            Bm25Index::deserialize(b);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;
    };
    CHECK(kind_of(std::string_view(bytes).substr(0, bytes.size() - 3)) == ErrorKind::corrupt_file);
    auto flipped = bytes;
    flipped.back() ^= 0x01;
    CHECK(kind_of(flipped) == ErrorKind::corrupt_file);
    auto future = bytes;
    future[8] = 7;
    CHECK(kind_of(future) == ErrorKind::version_mismatch);
}
