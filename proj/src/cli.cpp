// SPDX-License-Identifier: Apache-2.0
#include "exhibit/cli.hpp"

#include "exhibit/api_server.hpp"
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"
#include "exhibit/ingest.hpp"
#include "exhibit/store.hpp"
#include "exhibit/tools.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <thread>

namespace exhibit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<EmbeddingProvider> make_embedder(const std::string& kind, std::size_t dim, const std::string& endpoint)
{
    if (kind == "stub")
        return std::make_shared<StubEmbedder>(dim);
    if (kind == "remote") {
        if (endpoint.empty())
            throw Error(ErrorKind::configuration, "--embedder remote needs --endpoint");
        EmbeddingProviderConfig cfg;
        cfg.endpoint = endpoint;
        cfg.dimension = dim;
        return std::make_shared<RemoteEmbedder>(cfg);
    }
    throw Error(ErrorKind::configuration, "unknown embedder '" + kind + "'");
}

std::shared_ptr<EmbeddingProvider> embedder_for_store(const Store& store, const std::string& endpoint)
{
    return make_embedder(store.lock.value("embedder", std::string("stub")), store.dimension(), endpoint);
}

void print_report(std::ostream& out, const IngestReport& r)
{
    out << "collections: " << r.collections_accepted << "\n"
        << "records: " << r.records_accepted << "\n"
        << "images: " << r.images_indexed << "\n"
        << "rejected: " << r.rejected.size() << "\n";
    for (const auto& rej : r.rejected) {
        out << "  " << rej.kind << " line " << rej.line << " (" << rej.key << "):";
        for (const auto& v : rej.violations)
            out << " " << v << ";";
        out << "\n";
    }
    for (const auto& [name, secs] : r.build_seconds)
        out << "built " << name << " in " << secs << " s\n";
    for (const auto& [name, sum] : r.checksums)
        if (!name.starts_with("images/"))
            out << "sha256 " << sum << "  " << name << "\n";
    out << "store: " << r.store.string() << "\n";
}

std::atomic<ApiServer*> active_server{nullptr};

extern "C" void on_signal(int)
{
    if (auto* s = active_server.load())
        s->stop();
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multimodal collection explorer: ingest corpora, query indexes and serve the chat API."};
    app.require_subcommand(1);

    std::string manifest, out_dir, embedder_kind = "stub", endpoint;
    std::size_t dim = default_embedding_dimension;
    std::uint32_t hnsw_m = 16, ef_construction = 200, ef_search = 100;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate a manifest and build a store.");
    ingest_cmd->add_option("--manifest", manifest, "Manifest (JSON lines)")->required();
    ingest_cmd->add_option("--out", out_dir, "Store directory to create or replace")->required();
    ingest_cmd->add_option("--embedder", embedder_kind, "stub | remote")->check(CLI::IsMember({"stub", "remote"}));
    ingest_cmd->add_option("--endpoint", endpoint, "Embedding service URL (remote embedder)");
    ingest_cmd->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
    ingest_cmd->add_option("--hnsw-m", hnsw_m, "HNSW links per node on upper layers");
    ingest_cmd->add_option("--ef-construction", ef_construction, "HNSW build beam width");
    ingest_cmd->add_option("--ef-search", ef_search, "HNSW default search beam width");

    std::string fixture_out;
    std::uint64_t seed = 42;
    std::size_t n_collections = 3, n_records = 12;
    auto* fixture_cmd = app.add_subcommand("fixture", "Write a synthetic corpus (manifest.jsonl + images/).");
    fixture_cmd->add_option("--out", fixture_out, "Output directory")->required();
    fixture_cmd->add_option("--seed", seed, "Generator seed");
    fixture_cmd->add_option("--collections", n_collections, "Number of collections");
    fixture_cmd->add_option("--records", n_records, "Number of records");

    std::string store_dir, query, index_name = "rtitle";
    std::size_t k = 10;
    auto* search_cmd = app.add_subcommand("search", "Query one index of a store directly.");
    search_cmd->add_option("--store", store_dir, "Store directory")->required();
    search_cmd->add_option("--query", query, "Query text")->required();
    search_cmd->add_option("--index", index_name, "image | rtitle | ctitle | cdesc | bm25")
        ->check(CLI::IsMember({"image", "rtitle", "ctitle", "cdesc", "bm25"}));
    search_cmd->add_option("-k", k, "Number of hits")->check(CLI::PositiveNumber);
    search_cmd->add_option("--endpoint", endpoint, "Embedding service URL for stores built remotely");

    auto* stats_cmd = app.add_subcommand("stats", "Print corpus statistics of a store.");
    stats_cmd->add_option("--store", store_dir, "Store directory")->required();

    std::string models_file, host = "127.0.0.1", trace_file, portal_name, prompts_dir;
    int port = 8080;
    std::int64_t ttl = 3600;
    std::vector<std::string> cors;
    auto* serve_cmd = app.add_subcommand("serve", "Run the /v1 HTTP API.");
    serve_cmd->add_option("--store", store_dir, "Store directory")->required();
    serve_cmd->add_option("--models", models_file, "Model registry (JSON)")->required();
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
    serve_cmd->add_option("--ttl", ttl, "Session TTL in seconds")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--cors", cors, "Allowed origin (repeatable, '*' for any)");
    serve_cmd->add_option("--trace", trace_file, "Append JSON-lines trace events to this file");
    serve_cmd->add_option("--portal-name", portal_name, "Portal name used in the system prompt");
    serve_cmd->add_option("--prompts", prompts_dir, "Prompt directory (checked against frozen checksums)");
    serve_cmd->add_option("--endpoint", endpoint, "Embedding service URL for stores built remotely");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*ingest_cmd) {
            IngestConfig cfg;
            cfg.hnsw.M = hnsw_m;
            cfg.hnsw.ef_construction = ef_construction;
            cfg.hnsw.ef_search = ef_search;
            cfg.embedder_kind = embedder_kind;
            auto embedder = make_embedder(embedder_kind, dim, endpoint);
            print_report(out, ingest(manifest, out_dir, *embedder, cfg));
            return 0;
        }
        if (*fixture_cmd) {
            const auto corpus = generate_fixture(seed, n_collections, n_records);
            const auto path = write_fixture(corpus, fixture_out);
            out << "wrote " << corpus.collections.size() << " collections and " << corpus.records.size()
                << " records to " << path.string() << "\n";
            return 0;
        }
        if (*stats_cmd) {
            const auto store = open_store(store_dir);
            const auto s = store.catalog.stats();
            out << "total_records: " << s.total_records << "\n"
                << "total_collections: " << s.total_collections << "\n";
            for (const auto& [name, n] : s.records_per_collection)
                out << "  " << name << ": " << n << "\n";
            return 0;
        }
        if (*search_cmd) {
            const auto store = open_store(store_dir);
            std::vector<SearchHit> hits;
            if (index_name == "bm25") {
                hits = store.indexes.lexical.search(query, k);
            } else {
                auto embedder = embedder_for_store(store, endpoint);
                const auto field = index_name == "image"    ? VectorField::record_image
                                   : index_name == "rtitle" ? VectorField::record_title
                                   : index_name == "ctitle" ? VectorField::collection_title
                                                            : VectorField::collection_description;
                hits = store.indexes.vector(field).search(embedder->embed_text(query), k);
            }
            for (const auto& h : hits) {
                std::string label;
                if (const auto* r = store.catalog.find_record(h.id))
                    label = store.catalog.display_title(*r);
                else if (const auto* c = store.catalog.find_collection(h.id.value()))
                    label = c->title;
                out << h.score << "\t" << h.id.value() << "\t" << label << "\n";
            }
            return 0;
        }
        if (*serve_cmd) {
            const fs::path models_path = models_file;
            auto models_json = json::parse(read_file(models_path), nullptr, false);
            if (models_json.is_discarded())
                throw Error(ErrorKind::configuration, "model registry is not valid JSON");
            auto gateway = std::make_shared<const LvlmGateway>(
                LvlmGateway::from_config(models_json, models_path.parent_path()));

            ApiConfig api;
            api.bind_address = host;
            api.port = port;
            api.session_ttl = std::chrono::seconds(ttl);
            api.store_path = store_dir;
            api.cors_allowlist = cors;
            ApiServer server(api, gateway);
            if (port == 0)
                port = server.bind_any_port();
            else
                server.bind();

            std::thread loader([&] {
                try {
                    auto store = std::make_shared<const Store>(open_store(store_dir));
                    ToolEnvironment env{store, embedder_for_store(*store, endpoint), gateway,
                                        prompts_dir.empty() ? PromptCatalog{} : PromptCatalog::from_directory(prompts_dir),
                                        10, std::nullopt};
                    AgentConfig agent_cfg;
                    if (!portal_name.empty())
                        agent_cfg.prompt.portal_name = portal_name;
                    std::shared_ptr<TraceSink> sink;
                    if (!trace_file.empty())
                        sink = std::make_shared<JsonlTraceSink>(trace_file);
                    auto tools = std::make_shared<const ToolSuite>(std::move(env));
                    server.attach(store, std::make_shared<const Agent>(gateway, tools, agent_cfg, sink));
                    spdlog::info("store {} loaded: {} records", store_dir, store->catalog.records().size());
                } catch (const std::exception& e) {
                    spdlog::error("store load failed: {}", e.what());
                    server.stop();
                }
            });
            active_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            out << "listening on http://" << host << ":" << port << "/v1\n" << std::flush;
            server.serve();
            active_server = nullptr;
            loader.join();
            return 0;
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::manifest_not_found)
            err << "error: manifest not found: " << manifest << "\n";
        else
            err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace exhibit
