// SPDX-License-Identifier: Apache-2.0
#include "exhibit/api_server.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <shared_mutex>

namespace exhibit {

using nlohmann::json;

void ApiConfig::validate() const
{
    if (session_ttl.count() <= 0)
        throw Error(ErrorKind::configuration, "session TTL must be positive");
    if (max_upload_bytes == 0)
        throw Error(ErrorKind::configuration, "upload limit must be positive");
    if (worker_threads == 0)
        throw Error(ErrorKind::configuration, "worker thread count must be positive");
}

json record_card(const Catalog& catalog, const MuragId& id)
{
    const auto* r = catalog.find_record(id);
    if (!r)
        return nullptr;
    const auto* c = catalog.find_collection(r->collection_name);
    return {{"kind", "record"},
            {"murag_id", r->murag_id},
            {"title", catalog.display_title(*r)},
            {"fundus_id", r->fundus_id},
            {"catalogno", r->catalogno},
            {"collection_name", r->collection_name},
            {"collection_title", c ? c->title : std::string{}},
            {"image_name", r->image_name},
            {"image_url", "/v1/images/" + r->image_name},
            {"details", r->details}};
}

json collection_card(const Catalog& catalog, const MuragId& id)
{
    const auto* c = catalog.find_collection(id.value());
    if (!c)
        return nullptr;
    const auto stats = catalog.stats();
    auto it = stats.records_per_collection.find(c->collection_name);
    return {{"kind", "collection"},
            {"murag_id", c->murag_id},
            {"collection_name", c->collection_name},
            {"title", c->title},
            {"title_de", c->title_de},
            {"description", c->description},
            {"description_de", c->description_de},
            {"contacts", c->contacts},
            {"record_count", it == stats.records_per_collection.end() ? 0 : it->second}};
}

json render_payloads(const Catalog& catalog, const std::vector<RenderTag>& tags)
{
    json out = json::array();
    for (const auto& t : tags) {
        auto card = t.kind == RenderKind::record ? record_card(catalog, t.murag_id)
                                                 : collection_card(catalog, t.murag_id);
        if (!card.is_null())
            out.push_back(std::move(card));
    }
    return out;
}

struct ApiServer::Impl {
    ApiConfig config;
    std::shared_ptr<const LvlmGateway> gateway;
    SessionManager sessions;
    httplib::Server http;

    mutable std::shared_mutex backend_mutex;
    std::shared_ptr<const Store> store;
    std::shared_ptr<const Agent> agent;

    Impl(ApiConfig c, std::shared_ptr<const LvlmGateway> g, SessionManager::Clock clock)
        : config(std::move(c)), gateway(std::move(g)), sessions(config.session_ttl, std::move(clock))
    {
    }

    std::pair<std::shared_ptr<const Store>, std::shared_ptr<const Agent>> backend() const
    {
        std::shared_lock lock(backend_mutex);
        return {store, agent};
    }

    void routes();
    void handle_create(const httplib::Request& req, httplib::Response& res);
    void handle_message(const httplib::Request& req, httplib::Response& res);
    void handle_history(const httplib::Request& req, httplib::Response& res);
};

namespace {

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& detail)
{
    send_json(res, status, {{"error", kind}, {"detail", detail}});
}

int status_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::oversize_payload: return 413;
    case ErrorKind::unsupported_media_type: return 415;
    case ErrorKind::unknown_model:
    case ErrorKind::invalid_argument: return 400;
    case ErrorKind::provider_unreachable: return 502;
    default: return 500;
    }
}

json turn_json(const ChatTurn& turn, const Catalog* catalog)
{
    if (turn.role == Role::user) {
        json images = json::array();
        for (const auto& img : turn.images())
            images.push_back({{"upload_id", img.content_id()}, {"media_type", img.media_type()}});
        auto text = turn.text();
        if (!images.empty()) {
            const auto marker_end = text.find("]\n");
            if (text.starts_with("[uploaded image id: ") && marker_end != std::string::npos)
                text = text.substr(marker_end + 2);
        }
        return {{"role", "user"}, {"text", text}, {"images", images}};
    }
    const auto parsed = parse_render_tags(turn.text());
    return {{"role", "assistant"},
            {"markdown", turn.text()},
            {"renders", catalog ? render_payloads(*catalog, parsed.tags) : json::array()}};
}

} // namespace

void ApiServer::Impl::handle_create(const httplib::Request& req, httplib::Response& res)
{
    auto [st, ag] = backend();
    if (!ag) {
        send_error(res, 503, "not_ready", "the store is still loading");
        return;
    }
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        send_error(res, 400, "invalid_request", "body must be a JSON object");
        return;
    }
    std::string model = body.value("model_id", body.value("model", std::string{}));
    if (!gateway->has_model(model)) {
        send_error(res, 400, "unknown_model", "model '" + model + "' is not registered");
        return;
    }
    const auto id = sessions.create(ag->new_session({}, model));
    send_json(res, 201, {{"session_id", id}, {"model_id", model}});
}

void ApiServer::Impl::handle_message(const httplib::Request& req, httplib::Response& res)
{
    auto [st, ag] = backend();
    if (!ag) {
        send_error(res, 503, "not_ready", "the store is still loading");
        return;
    }
    const std::string id = req.matches[1];

    std::string text;
    std::optional<ImageData> image;
    try {
        if (req.is_multipart_form_data()) {
            if (req.has_file("text"))
                text = req.get_file_value("text").content;
            if (req.has_file("image")) {
                auto f = req.get_file_value("image");
                auto media = f.content_type.empty() ? media_type_for_path(f.filename) : f.content_type;
                image = ImageData(std::move(f.content), media);
            }
        } else {
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object())
                throw Error(ErrorKind::invalid_argument, "body must be a JSON object");
            text = body.value("text", std::string{});
            if (body.contains("image") && !body["image"].is_null()) {
                const auto& img = body["image"];
                if (!img.is_object() || !img.contains("data") || !img["data"].is_string())
                    throw Error(ErrorKind::invalid_argument, "image must be {\"data\": base64, \"media_type\"}");
                image = ImageData(base64_decode(img["data"].get<std::string>()), img.value("media_type", ""));
            }
        }
        if (image) {
            if (image->size() > config.max_upload_bytes)
                throw Error(ErrorKind::oversize_payload, "image exceeds the upload limit of " +
                                                             std::to_string(config.max_upload_bytes) + " bytes");
            if (!is_supported_media_type(image->media_type()))
                throw Error(ErrorKind::unsupported_media_type, "unsupported image type '" + image->media_type() + "'");
            if (image->empty())
                throw Error(ErrorKind::invalid_argument, "image is empty");
        }
        if (text.empty() && !image)
            throw Error(ErrorKind::invalid_argument, "message needs text or an image");

        auto lease = sessions.try_acquire(id);
        if (!lease) {
            send_error(res, 409, "conflict", "a message for this session is already being processed");
            return;
        }
        auto& session = lease->session();
        auto turn = make_user_turn(session, text, image);
        auto reply = ag->run(session, std::move(turn));
        lease->commit();

        json trace = json::array();
        for (const auto& e : reply.trace)
            trace.push_back(to_json(e));
        send_json(res, 200,
                  {{"session_id", id},
                   {"markdown", reply.markdown},
                   {"renders", render_payloads(st->catalog, reply.render_tags)},
                   {"trace_id", reply.trace_id},
                   {"trace", trace},
                   {"rounds", reply.rounds},
                   {"cap_reached", reply.cap_reached}});
    } catch (const Error& e) {
        send_error(res, status_for(e.kind()), e.kind() == ErrorKind::invalid_argument ? "invalid_request"
                                                                                       : to_string(e.kind()),
                   e.what());
    }
}

void ApiServer::Impl::handle_history(const httplib::Request& req, httplib::Response& res)
{
    const std::string id = req.matches[1];
    try {
        auto session = sessions.snapshot(id);
        auto [st, ag] = backend();
        json turns = json::array();
        for (const auto& t : session.history) {
            if (t.role == Role::system || t.role == Role::tool || !t.tool_calls.empty())
                continue;
            turns.push_back(turn_json(t, st ? &st->catalog : nullptr));
        }
        send_json(res, 200, {{"session_id", id}, {"model_id", session.model}, {"turns", turns}});
    } catch (const Error& e) {
        send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
    }
}

void ApiServer::Impl::routes()
{
    const auto workers = config.worker_threads;
    http.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    // base64 JSON bodies are ~4/3 of the image size
    http.set_payload_max_length(config.max_upload_bytes / 3 * 4 + 64 * 1024);

    http.Post("/v1/sessions", [this](const auto& req, auto& res) { handle_create(req, res); });
    http.Post(R"(/v1/sessions/([0-9A-Za-z]+)/messages)",
              [this](const auto& req, auto& res) { handle_message(req, res); });
    http.Get(R"(/v1/sessions/([0-9A-Za-z]+)/history)",
             [this](const auto& req, auto& res) { handle_history(req, res); });
    http.Get("/v1/models", [this](const auto&, auto& res) {
        json models = json::array();
        for (const auto& m : gateway->list_models())
            models.push_back({{"id", m.id}, {"display_name", m.display_name}, {"provider", m.provider_tag}});
        send_json(res, 200, {{"models", models}});
    });
    http.Get(R"(/v1/images/([^/]+))", [this](const auto& req, auto& res) {
        auto [st, ag] = backend();
        if (!st) {
            send_error(res, 503, "not_ready", "the store is still loading");
            return;
        }
        const std::string name = req.matches[1];
        auto img = st->catalog.load_image(name);
        if (!img) {
            send_error(res, 404, "not_found", "no image named " + name);
            return;
        }
        res.status = 200;
        res.set_content(std::string(img->bytes()), img->media_type());
    });
    http.Get("/v1/health", [this](const auto&, auto& res) {
        auto [st, ag] = backend();
        if (!st || !ag) {
            send_json(res, 503, {{"status", "starting"}});
            return;
        }
        json indexes = json::object();
        for (auto f : all_vector_fields)
            indexes[std::string(index_file_name(f))] = st->indexes.vector(f).size();
        indexes[std::string(bm25_file)] = st->indexes.lexical.size();
        send_json(res, 200,
                  {{"status", "ok"},
                   {"records", st->catalog.records().size()},
                   {"collections", st->catalog.collections().size()},
                   {"indexes", indexes},
                   {"sessions", sessions.size()}});
    });
    http.Options(R"(.*)", [](const auto&, auto& res) { res.status = 204; });

    http.set_error_handler([](const auto&, auto& res) {
        if (!res.body.empty())
            return;
        switch (res.status) {
        case 404: send_error(res, 404, "not_found", "no such endpoint"); break;
        case 413: send_error(res, 413, "oversize_payload", "request body exceeds the upload limit"); break;
        default: send_error(res, res.status, "http_error", "request failed"); break;
        }
    });
    http.set_exception_handler([](const auto&, auto& res, std::exception_ptr ep) {
        std::string detail = "internal error";
        std::string kind = "internal";
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            detail = e.what();
            kind = to_string(e.kind());
        } catch (const std::exception& e) {
            detail = e.what();
        }
        spdlog::error("request failed: {}", detail);
        send_error(res, 500, kind, detail);
    });
    http.set_post_routing_handler([this](const auto& req, auto& res) {
        const auto origin = req.get_header_value("Origin");
        if (origin.empty())
            return;
        const auto& allow = config.cors_allowlist;
        if (std::ranges::find(allow, "*") != allow.end() || std::ranges::find(allow, origin) != allow.end()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.set_header("Vary", "Origin");
        }
    });
}

ApiServer::ApiServer(ApiConfig config, std::shared_ptr<const LvlmGateway> gateway, SessionManager::Clock clock)
{
    config.validate();
    if (!gateway || gateway->list_models().empty())
        throw Error(ErrorKind::configuration, "the API server needs at least one registered model");
    impl_ = std::make_unique<Impl>(std::move(config), std::move(gateway), std::move(clock));
    impl_->routes();
}

ApiServer::~ApiServer()
{
    if (impl_)
        impl_->http.stop();
}

void ApiServer::attach(std::shared_ptr<const Store> store, std::shared_ptr<const Agent> agent)
{
    std::unique_lock lock(impl_->backend_mutex);
    impl_->store = std::move(store);
    impl_->agent = std::move(agent);
}

bool ApiServer::ready() const
{
    auto [st, ag] = impl_->backend();
    return st && ag;
}

int ApiServer::bind_any_port()
{
    const int port = impl_->http.bind_to_any_port(impl_->config.bind_address);
    if (port < 0)
        throw Error(ErrorKind::io, "cannot bind " + impl_->config.bind_address);
    return port;
}

void ApiServer::bind()
{
    if (!impl_->http.bind_to_port(impl_->config.bind_address, impl_->config.port))
        throw Error(ErrorKind::io,
                    "cannot bind " + impl_->config.bind_address + ":" + std::to_string(impl_->config.port));
}

void ApiServer::serve()
{
    impl_->http.listen_after_bind();
}

void ApiServer::stop()
{
    impl_->http.stop();
}

void ApiServer::wait_until_ready() const
{
    impl_->http.wait_until_ready();
}

SessionManager& ApiServer::sessions() noexcept
{
    return impl_->sessions;
}

} // namespace exhibit
