// SPDX-License-Identifier: Apache-2.0
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"
#include "exhibit/lvlm.hpp"

#include <httplib.h>

namespace exhibit {

using nlohmann::json;

namespace {

json content_parts(const ChatTurn& turn)
{
    json parts = json::array();
    for (const auto& p : turn.parts) {
        if (p.is_text()) {
            parts.push_back({{"type", "text"}, {"text", p.as_text()}});
        } else {
            const auto& img = p.as_image();
            parts.push_back({{"type", "image_url"},
                             {"image_url",
                              {{"url", "data:" + img.media_type() + ";base64," + base64_encode(img.bytes())}}}});
        }
    }
    return parts;
}

} // namespace

json to_openai_request(const GenerateRequest& request, const std::string& vendor_model)
{
    json messages = json::array();
    if (!request.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    for (const auto& turn : request.history) {
        switch (turn.role) {
        case Role::system: messages.push_back({{"role", "system"}, {"content", turn.text()}}); break;
        case Role::user:
            if (turn.images().empty())
                messages.push_back({{"role", "user"}, {"content", turn.text()}});
            else
                messages.push_back({{"role", "user"}, {"content", content_parts(turn)}});
            break;
        case Role::assistant: {
            json m = {{"role", "assistant"}};
            if (turn.tool_calls.empty()) {
                m["content"] = turn.text();
            } else {
                m["content"] = nullptr;
                json calls = json::array();
                for (const auto& c : turn.tool_calls)
                    calls.push_back({{"id", c.id},
                                     {"type", "function"},
                                     {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
                m["tool_calls"] = calls;
            }
            messages.push_back(std::move(m));
            break;
        }
        case Role::tool:
            messages.push_back(
                {{"role", "tool"}, {"tool_call_id", turn.tool_call_id.value_or("")}, {"content", turn.text()}});
            break;
        }
    }
    json body = {{"model", vendor_model}, {"messages", messages}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools)
            tools.push_back({{"type", "function"}, {"function", t.to_json()}});
        body["tools"] = tools;
    }
    return body;
}

LvlmResponse from_openai_response(const json& body)
{
    if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
        throw Error(ErrorKind::malformed_response, "completion has no choices");
    const auto& choice = body["choices"][0];
    const auto& msg = choice.value("message", json::object());

    if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
        std::vector<ToolCall> calls;
        for (const auto& c : msg["tool_calls"]) {
            ToolCall call;
            call.id = c.value("id", "call_" + std::to_string(calls.size()));
            const auto& fn = c.value("function", json::object());
            call.name = fn.value("name", std::string{});
            const auto raw = fn.value("arguments", std::string{"{}"});
            auto parsed = json::parse(raw.empty() ? "{}" : raw, nullptr, false);
            // left for argument validation to reject
            call.arguments = parsed.is_discarded() ? json(raw) : parsed;
            calls.push_back(std::move(call));
        }
        return LvlmResponse::tool_calls(std::move(calls));
    }
    if (msg.contains("refusal") && msg["refusal"].is_string())
        return LvlmResponse::final_text(msg["refusal"].get<std::string>());
    if (choice.value("finish_reason", std::string{}) == "content_filter" &&
        !(msg.contains("content") && msg["content"].is_string()))
        return LvlmResponse::final_text("The model declined to answer this request.");
    if (msg.contains("content") && msg["content"].is_string())
        return LvlmResponse::final_text(msg["content"].get<std::string>());
    throw Error(ErrorKind::malformed_response, "completion has neither content nor tool calls");
}

OpenAiCompatibleProvider::OpenAiCompatibleProvider(OpenAiCompatibleConfig config) : config_(std::move(config))
{
    auto scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos)
        throw Error(ErrorKind::configuration, "model endpoint must be an http(s) URL: " + config_.endpoint);
    auto path = config_.endpoint.find('/', scheme + 3);
    scheme_host_port_ = config_.endpoint.substr(0, path);
    base_path_ = path == std::string::npos ? "" : config_.endpoint.substr(path);
    while (!base_path_.empty() && base_path_.back() == '/')
        base_path_.pop_back();
}

LvlmResponse OpenAiCompatibleProvider::generate(const GenerateRequest& request)
{
    const auto body = to_openai_request(request, config_.model).dump();
    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_write_timeout(config_.timeout_seconds, 0);
        auto res = client.Post(base_path_ + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorKind::malformed_response, "model endpoint answered HTTP " + std::to_string(res->status));
        auto parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw Error(ErrorKind::malformed_response, "model endpoint returned invalid JSON");
        return from_openai_response(parsed);
    }
    throw Error(ErrorKind::provider_unreachable, "model endpoint unreachable after " +
                                                     std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

} // namespace exhibit
