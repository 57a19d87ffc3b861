// SPDX-License-Identifier: Apache-2.0
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"
#include "exhibit/prompts.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

using namespace exhibit;
namespace fs = std::filesystem;

namespace {

const fs::path source_prompts = fs::path(EXHIBIT_SOURCE_DIR) / "prompts";

} // namespace

TEST_CASE("repository prompt files match their frozen checksums")
{
    for (auto id : prompts::all_prompts) {
        CAPTURE(prompts::file_name(id));
        const auto body = read_file(source_prompts / prompts::file_name(id));
        CHECK(sha256_hex(body) == prompts::frozen_sha256(id));
    }
}

TEST_CASE("compiled-in prompts are byte-identical to the files")
{
    for (auto id : prompts::all_prompts) {
        CAPTURE(prompts::file_name(id));
        CHECK(prompts::text(id) == read_file(source_prompts / prompts::file_name(id)));
        CHECK(PromptCatalog{}.get(id) == prompts::text(id));
    }
}

TEST_CASE("loading a prompt directory checks every file")
{
    testing::TempDir dir;
    for (auto id : prompts::all_prompts)
        fs::copy_file(source_prompts / prompts::file_name(id), dir / std::string(prompts::file_name(id)));
    const auto catalog = PromptCatalog::from_directory(dir.path());
    CHECK(catalog.get(prompts::PromptId::vqa) == prompts::text(prompts::PromptId::vqa));

    write_file(dir / "ocr.md", std::string(prompts::text(prompts::PromptId::ocr)) + " ");
    CHECK_THROWS_AS(PromptCatalog::from_directory(dir.path()), Error);
    fs::remove(dir / "ocr.md");
    try {
        PromptCatalog::from_directory(dir.path());
        FAIL("expected a configuration error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}

TEST_CASE("system prompt template")
{
    const auto prompt = build_system_prompt();
    CHECK(prompt.find("Never makeup names or IDs to call a tool") != std::string::npos);
    CHECK(prompt.find("<FundusRecord murag_id='...' />") != std::string::npos);
    CHECK(prompt.find("<FundusCollection murag_id='...' />") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);
    CHECK(prompt.find("Collection Explorer") != std::string::npos);
    CHECK(prompt == build_system_prompt());

    PromptConfig custom;
    custom.portal_name = "Museum Portal";
    custom.basic_information = "Only beetles.";
    const auto other = build_system_prompt(custom);
    CHECK(other.find("Museum Portal") != std::string::npos);
    CHECK(other.find("Only beetles.") != std::string::npos);
    CHECK(other.find("Collection Explorer") == std::string::npos);
}

TEST_CASE("prompt ids map to distinct files")
{
    std::set<std::string_view> names;
    for (auto id : prompts::all_prompts)
        names.insert(prompts::file_name(id));
    CHECK(names.size() == std::size(prompts::all_prompts));
    CHECK(prompts::file_name(prompts::PromptId::detect_objects) == "detect_objects.md");
}
