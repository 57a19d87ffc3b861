// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/agent.hpp"
#include "exhibit/lvlm.hpp"
#include "exhibit/session.hpp"
#include "exhibit/store.hpp"

#include <json.hpp>

#include <chrono>
#include <memory>
#include <string>
#include <vector>

namespace exhibit {

struct ApiConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    std::chrono::seconds session_ttl{3600};
    std::size_t max_upload_bytes = 8u * 1024u * 1024u;
    std::filesystem::path store_path;
    /// Origins allowed by CORS; "*" allows any.
    std::vector<std::string> cors_allowlist;
    std::size_t worker_threads = 64;

    /// Errors: configuration.
    void validate() const;
};

/// Card payload for a render tag, or null when the id does not resolve.
nlohmann::json record_card(const Catalog& catalog, const MuragId& id);
nlohmann::json collection_card(const Catalog& catalog, const MuragId& id);
nlohmann::json render_payloads(const Catalog& catalog, const std::vector<RenderTag>& tags);

/// The /v1 HTTP API. The model registry is needed from the start; the store
/// and agent are attached once loaded, and /v1/health answers 503 until then.
///
///   POST /v1/sessions                     {"model_id"}             -> 201 {"session_id","model_id"}
///   POST /v1/sessions/{id}/messages       JSON or multipart        -> 200 reply
///   GET  /v1/sessions/{id}/history                                 -> 200 {"turns":[...]}
///   GET  /v1/models                                                -> 200 {"models":[...]}
///   GET  /v1/images/{image_name}                                   -> 200 bytes
///   GET  /v1/health                                                -> 200 | 503
/// Errors use {"error": kind, "detail": text}.
class ApiServer {
public:
    ApiServer(ApiConfig config, std::shared_ptr<const LvlmGateway> gateway,
              SessionManager::Clock clock = [] { return std::chrono::steady_clock::now(); });
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    void attach(std::shared_ptr<const Store> store, std::shared_ptr<const Agent> agent);
    bool ready() const;

    /// Binds config.bind_address on a free port and returns it.
    int bind_any_port();
    /// Binds config.bind_address:config.port. Errors: io.
    void bind();
    /// Serves until stop(); call after a bind.
    void serve();
    void stop();
    void wait_until_ready() const;

    SessionManager& sessions() noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace exhibit
