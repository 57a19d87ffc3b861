// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/agent.hpp"
#include "exhibit/checksum.hpp"
#include "exhibit/ingest.hpp"
#include "exhibit/lvlm.hpp"
#include "exhibit/store.hpp"
#include "exhibit/tools.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace testing {

namespace fs = std::filesystem;
using nlohmann::json;

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("exhibit-test-" + exhibit::random_hex(8)))
    {
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline constexpr std::size_t test_dim = 32;

/// Fixture corpus written under `dir`, ingested with the stub embedder and
/// loaded back.
inline std::shared_ptr<const exhibit::Store> fixture_store(const fs::path& dir, std::size_t n_collections = 3,
                                                           std::size_t n_records = 12, std::uint64_t seed = 42,
                                                           std::size_t dim = test_dim)
{
    const auto corpus = exhibit::generate_fixture(seed, n_collections, n_records);
    const auto manifest = exhibit::write_fixture(corpus, dir / "corpus");
    exhibit::StubEmbedder embedder(dim);
    exhibit::ingest(manifest, dir / "store", embedder);
    return std::make_shared<const exhibit::Store>(exhibit::open_store(dir / "store"));
}

/// A gateway with one scripted model named "stub".
struct ScriptedGateway {
    std::shared_ptr<exhibit::ScriptedStub> stub = std::make_shared<exhibit::ScriptedStub>();
    std::shared_ptr<exhibit::LvlmGateway> gateway = [this] {
        auto g = std::make_shared<exhibit::LvlmGateway>();
        g->register_model({"stub", "Scripted stub", "stub"}, stub);
        return g;
    }();
};

inline exhibit::ToolCall call(std::string id, std::string name, json args = json::object())
{
    return {std::move(id), std::move(name), std::move(args)};
}

inline exhibit::ScriptStep calls_step(std::vector<exhibit::ToolCall> calls)
{
    return exhibit::ScriptStep::respond(exhibit::LvlmResponse::tool_calls(std::move(calls)));
}

inline exhibit::ScriptStep text_step(std::string text)
{
    return exhibit::ScriptStep::respond(exhibit::LvlmResponse::final_text(std::move(text)));
}

inline std::shared_ptr<const exhibit::ToolSuite> make_tools(std::shared_ptr<const exhibit::Store> store,
                                                            std::shared_ptr<const exhibit::LvlmGateway> gateway,
                                                            std::optional<std::size_t> ef_search = std::nullopt)
{
    exhibit::ToolEnvironment env{store, std::make_shared<exhibit::StubEmbedder>(store->dimension()),
                                 std::move(gateway), exhibit::PromptCatalog{}, 10, ef_search};
    return std::make_shared<const exhibit::ToolSuite>(std::move(env));
}

/// First record whose display title equals `title`.
inline const exhibit::RecordDescriptor& record_titled(const exhibit::Catalog& catalog, const std::string& title)
{
    for (const auto& r : catalog.records())
        if (catalog.display_title(r) == title)
            return r;
    throw std::runtime_error("fixture has no record titled " + title);
}

} // namespace testing
