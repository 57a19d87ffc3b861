// SPDX-License-Identifier: Apache-2.0
#include "exhibit/error.hpp"
#include "exhibit/ingest.hpp"
#include "support/ingest_checks.hpp"

#include <doctest.h>

using namespace exhibit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exhibit::Error");
    return ErrorKind::io;
}

/// Fails every call once `budget` calls have been served.
class FlakyEmbedder final : public EmbeddingProvider {
public:
    explicit FlakyEmbedder(int budget) : budget_(budget) {}
    std::size_t dimension() const override { return inner_.dimension(); }

protected:
    std::vector<std::vector<float>> raw_embed_text(std::span<const std::string> texts) override
    {
        spend();
        std::vector<std::vector<float>> out;
        for (const auto& t : texts) {
            const auto v = inner_.embed_text(t).components();
            out.emplace_back(v.begin(), v.end());
        }
        return out;
    }
    std::vector<float> raw_embed_image(const ImageData& image) override
    {
        spend();
        const auto v = inner_.embed_image(image).components();
        return {v.begin(), v.end()};
    }

private:
    void spend()
    {
        if (budget_-- <= 0)
            throw Error(ErrorKind::provider_unreachable, "embedding service down");
    }
    StubEmbedder inner_{testing::test_dim};
    int budget_;
};

std::vector<json> manifest_lines(const fs::path& manifest)
{
    std::vector<json> lines;
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            lines.push_back(json::parse(line));
    return lines;
}

void write_lines(const fs::path& manifest, const std::vector<json>& lines)
{
    std::string text;
    for (const auto& l : lines)
        text += l.dump() + "\n";
    write_file(manifest, text);
}

} // namespace

TEST_CASE("fixture ingest integrity")
{
    const auto m = testing::fixture_ingest_integrity();
    CHECK_MESSAGE(m.ok(), m.summary());
}

TEST_CASE("ingest report")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    StubEmbedder embedder(testing::test_dim);
    const auto report = ingest(manifest, dir / "store", embedder);
    CHECK(report.collections_input == 3);
    CHECK(report.records_input == 12);
    CHECK(report.store == dir / "store");
    CHECK(report.build_seconds.size() == 5);
    for (const auto& f : testing::snapshot_files)
        CHECK(report.checksums.at(f) == sha256_hex(read_file(dir / "store" / f)));

    const auto j = report.to_json();
    CHECK(j["records"] == 12);
    CHECK(j["input"]["collections"] == 3);
    CHECK(j["rejected"].empty());

    const auto lock = json::parse(read_file(dir / "store" / "manifest.lock"));
    CHECK(lock["dimension"] == testing::test_dim);
    CHECK(lock["embedder"] == "stub");
    CHECK(lock["counts"]["records"] == 12);
}

TEST_CASE("a record whose image is missing is rejected")
{
    testing::TempDir dir;
    const auto corpus = generate_fixture(42, 3, 12);
    const auto manifest = write_fixture(corpus, dir / "corpus");
    const auto victim = corpus.records[5];
    fs::remove(dir / "corpus" / "images" / victim.image_name);

    StubEmbedder embedder(testing::test_dim);
    const auto report = ingest(manifest, dir / "store", embedder);
    CHECK(report.records_accepted == 11);
    CHECK(report.images_indexed == 11);
    REQUIRE(report.rejected.size() == 1);
    const auto& rej = report.rejected[0];
    CHECK(rej.kind == "record");
    CHECK(rej.violations == std::vector<std::string>{"missing image"});
    CHECK(rej.key == victim.catalogno + "/" + victim.image_name);
    // header line, 3 collections, then records in order
    CHECK(rej.line == 1 + 3 + 5 + 1);

    const auto store = open_store(dir / "store");
    CHECK(store.catalog.stats().total_records == 11);
    CHECK(store.catalog.find_record(victim.murag_id) == nullptr);
}

TEST_CASE("entry validation rejects bad collections and records")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    auto lines = manifest_lines(manifest);
    REQUIRE(lines.size() == 16);

    auto bad_collection = lines[1];
    bad_collection["collection_name"] = "not url safe!";
    auto dup_collection = lines[2];
    auto orphan = lines[4];
    orphan["collection_name"] = "nowhere";
    auto bad_detail = lines[4];
    bad_detail["catalogno"] = "X-1";
    bad_detail["fundus_id"] = 999;
    bad_detail["details"]["Colour"] = "red";
    auto tiff = lines[4];
    tiff["catalogno"] = "X-2";
    tiff["fundus_id"] = 998;
    tiff["image_name"] = "scan.tiff";
    auto dup_record = lines[4];
    auto clash = lines[4];
    clash["image_name"] = lines[5]["image_name"];
    clash["title"] = "Not quartz";
    for (const auto& extra : {bad_collection, dup_collection, orphan, bad_detail, tiff, dup_record, clash})
        lines.push_back(extra);
    write_lines(manifest, lines);

    StubEmbedder embedder(testing::test_dim);
    const auto report = ingest(manifest, dir / "store", embedder);
    CHECK(report.collections_accepted == 3);
    CHECK(report.records_accepted == 12);
    REQUIRE(report.rejected.size() == 7);
    std::vector<std::string> first;
    for (const auto& r : report.rejected)
        first.push_back(r.violations.front());
    CHECK(first[0].find("not URL-safe") != std::string::npos);
    CHECK(first[1].find("duplicate collection_name") != std::string::npos);
    CHECK(first[2] == "unknown collection nowhere");
    CHECK(first[3] == "unknown detail field Colour");
    CHECK(first[4] == "unsupported image type scan.tiff");
    CHECK(first[5].find("duplicate murag_id") != std::string::npos);
    CHECK(first[6].find("inconsistent multi-image record") != std::string::npos);
}

TEST_CASE("a second image of the same object is accepted")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    auto lines = manifest_lines(manifest);
    auto second_view = lines[4];
    second_view["image_name"] = lines[5]["image_name"];
    lines.push_back(second_view);
    write_lines(manifest, lines);
    StubEmbedder embedder(testing::test_dim);
    const auto report = ingest(manifest, dir / "store", embedder);
    CHECK(report.rejected.empty());
    CHECK(report.records_accepted == 13);
}

TEST_CASE("manifest errors")
{
    testing::TempDir dir;
    StubEmbedder embedder(testing::test_dim);
    CHECK(kind_of([&] { ingest(dir / "nope.jsonl", dir / "store", embedder); }) == ErrorKind::manifest_not_found);
    CHECK(kind_of([&] { read_manifest(dir.path()); }) == ErrorKind::manifest_not_found);

    write_file(dir / "bad.jsonl", "{\"kind\":\"record\"}\n{not json\n");
    CHECK(kind_of([&] { read_manifest(dir / "bad.jsonl"); }) == ErrorKind::manifest_parse);
    write_file(dir / "kind.jsonl", "{\"kind\":\"exhibit\"}\n");
    CHECK(kind_of([&] { read_manifest(dir / "kind.jsonl"); }) == ErrorKind::manifest_parse);
    write_file(dir / "array.jsonl", "[1,2]\n");
    CHECK(kind_of([&] { read_manifest(dir / "array.jsonl"); }) == ErrorKind::manifest_parse);

    write_file(dir / "blank.jsonl", "\n{\"kind\":\"manifest\",\"image_root\":\"pics\"}\n\n");
    const auto parsed = read_manifest(dir / "blank.jsonl");
    CHECK(parsed.image_root == dir / "pics");
    CHECK(parsed.records.empty());
}

TEST_CASE("fixture generation is deterministic")
{
    const auto a = generate_fixture(42, 3, 12);
    const auto b = generate_fixture(42, 3, 12);
    CHECK(fixture_manifest(a) == fixture_manifest(b));
    CHECK(a.images == b.images);
    CHECK(a.images != generate_fixture(43, 3, 12).images);

    CHECK(a.collections.size() == 3);
    CHECK(a.records.size() == 12);
    CHECK(a.collections[0].title == "Mineralogical Collection");
    for (const auto& r : a.records) {
        CHECK(!r.murag_id.empty());
        CHECK(a.images.contains(r.image_name));
    }

    const auto big = generate_fixture(1, 6, 60);
    std::set<std::string> names;
    for (const auto& c : big.collections)
        names.insert(c.collection_name);
    CHECK(names.size() == 6);
}

TEST_CASE("fixture size preconditions")
{
    CHECK(kind_of([] { generate_fixture(1, 4, 3); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { generate_fixture(1, 0, 3); }) == ErrorKind::invalid_argument);
    CHECK_NOTHROW(generate_fixture(1, 1, 1));
}

TEST_CASE("embedding failure aborts without output")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    for (int budget : {0, 1, 3}) {
        CAPTURE(budget);
        FlakyEmbedder flaky(budget);
        CHECK(kind_of([&] { ingest(manifest, dir / "out" / "store", flaky); }) == ErrorKind::provider_unreachable);
        CHECK_FALSE(fs::exists(dir / "out" / "store"));
        CHECK(fs::is_empty(dir / "out"));
    }
}

TEST_CASE("a failed re-ingest keeps the previous store")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    StubEmbedder embedder(testing::test_dim);
    const auto good = ingest(manifest, dir / "store", embedder);
    FlakyEmbedder flaky(2);
    CHECK_THROWS_AS(ingest(manifest, dir / "store", flaky), Error);
    for (const auto& [name, sum] : good.checksums)
        CHECK(sha256_hex(read_file(dir / "store" / name)) == sum);
    CHECK_NOTHROW(open_store(dir / "store"));
}

TEST_CASE("ingest refuses to overwrite a directory that is not a store")
{
    testing::TempDir dir;
    const auto manifest = write_fixture(generate_fixture(42, 3, 12), dir / "corpus");
    fs::create_directories(dir / "precious");
    write_file(dir / "precious" / "thesis.txt", "do not delete");
    StubEmbedder embedder(testing::test_dim);
    CHECK(kind_of([&] { ingest(manifest, dir / "precious", embedder); }) == ErrorKind::io);
    CHECK(read_file(dir / "precious" / "thesis.txt") == "do not delete");
}

TEST_CASE("opening a damaged store fails loudly")
{
    testing::TempDir dir;
    testing::fixture_store(dir.path());
    const auto store = dir / "store";

    auto records = read_file(store / "records.db");
    records[records.size() / 2] ^= 0x01;
    write_file(store / "records.db", records);
    CHECK(kind_of([&] { open_store(store); }) == ErrorKind::corrupt_file);

    testing::TempDir other;
    testing::fixture_store(other.path());
    fs::remove(other / "store" / "bm25.idx");
    CHECK(kind_of([&] { open_store(other / "store"); }) == ErrorKind::not_found);
    CHECK(kind_of([&] { open_store(other / "missing"); }) == ErrorKind::not_found);
}

TEST_CASE("stored images are copied next to the indexes")
{
    testing::TempDir dir;
    const auto corpus = generate_fixture(42, 3, 12);
    const auto store = testing::fixture_store(dir.path());
    for (const auto& r : store->catalog.records()) {
        const auto img = store->catalog.load_image(r.image_name);
        REQUIRE(img);
        CHECK(img->bytes() == corpus.images.at(r.image_name));
        CHECK(img->media_type() == "image/png");
    }
    fs::remove_all(dir / "corpus");
    CHECK(open_store(dir / "store").catalog.load_image(store->catalog.records()[0].image_name));
}
