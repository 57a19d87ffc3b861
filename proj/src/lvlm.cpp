// SPDX-License-Identifier: Apache-2.0
#include "exhibit/lvlm.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace exhibit {

using nlohmann::json;

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "unknown";
}

ChatTurn ChatTurn::system(std::string text)
{
    ChatTurn t;
    t.role = Role::system;
    t.parts.push_back(ChatPart::text(std::move(text)));
    return t;
}

ChatTurn ChatTurn::user(std::string text)
{
    ChatTurn t;
    t.role = Role::user;
    t.parts.push_back(ChatPart::text(std::move(text)));
    return t;
}

ChatTurn ChatTurn::user(std::vector<ChatPart> parts)
{
    ChatTurn t;
    t.role = Role::user;
    t.parts = std::move(parts);
    return t;
}

ChatTurn ChatTurn::assistant(std::string text)
{
    ChatTurn t;
    t.role = Role::assistant;
    t.parts.push_back(ChatPart::text(std::move(text)));
    return t;
}

ChatTurn ChatTurn::assistant_calls(std::vector<ToolCall> calls)
{
    ChatTurn t;
    t.role = Role::assistant;
    t.parts.push_back(ChatPart::text(""));
    t.tool_calls = std::move(calls);
    return t;
}

ChatTurn ChatTurn::tool(std::string call_id, std::string content)
{
    ChatTurn t;
    t.role = Role::tool;
    t.tool_call_id = std::move(call_id);
    t.parts.push_back(ChatPart::text(std::move(content)));
    return t;
}

std::string ChatTurn::text() const
{
    std::string out;
    for (const auto& p : parts)
        if (p.is_text())
            out += p.as_text();
    return out;
}

std::vector<ImageData> ChatTurn::images() const
{
    std::vector<ImageData> out;
    for (const auto& p : parts)
        if (p.is_image())
            out.push_back(p.as_image());
    return out;
}

namespace {

std::string_view schema_type(ParamType t)
{
    switch (t) {
    case ParamType::string:
    case ParamType::enumeration: return "string";
    case ParamType::integer: return "integer";
    case ParamType::number: return "number";
    case ParamType::boolean: return "boolean";
    }
    return "string";
}

} // namespace

json ToolSpec::parameters_schema() const
{
    json props = json::object();
    json required = json::array();
    for (const auto& p : params) {
        json prop = {{"type", schema_type(p.type)}, {"description", p.description}};
        if (p.type == ParamType::enumeration)
            prop["enum"] = p.enum_values;
        props[p.name] = std::move(prop);
        if (p.required)
            required.push_back(p.name);
    }
    return {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

json ToolSpec::to_json() const
{
    return {{"name", name}, {"description", description}, {"parameters", parameters_schema()}};
}

std::optional<std::string> validate_arguments(const ToolSpec& spec, const json& arguments)
{
    if (!arguments.is_object())
        return "arguments must be a JSON object";
    for (const auto& [key, value] : arguments.items()) {
        auto it = std::ranges::find(spec.params, key, &ParamSpec::name);
        if (it == spec.params.end())
            return "unknown argument '" + key + "'";
        switch (it->type) {
        case ParamType::string:
            if (!value.is_string())
                return "argument '" + key + "' must be a string";
            break;
        case ParamType::integer:
            if (!value.is_number_integer()) {
                const bool integral_float = value.is_number_float() && std::isfinite(value.get<double>()) &&
                                            std::floor(value.get<double>()) == value.get<double>();
                if (!integral_float)
                    return "argument '" + key + "' must be an integer";
            }
            break;
        case ParamType::number:
            if (!value.is_number())
                return "argument '" + key + "' must be a number";
            break;
        case ParamType::boolean:
            if (!value.is_boolean())
                return "argument '" + key + "' must be a boolean";
            break;
        case ParamType::enumeration:
            if (!value.is_string() || std::ranges::find(it->enum_values, value.get<std::string>()) ==
                                          it->enum_values.end()) {
                std::string allowed;
                for (const auto& v : it->enum_values)
                    allowed += (allowed.empty() ? "" : ", ") + v;
                return "argument '" + key + "' must be one of: " + allowed;
            }
            break;
        }
    }
    for (const auto& p : spec.params)
        if (p.required && !arguments.contains(p.name))
            return "missing required argument '" + p.name + "'";
    return std::nullopt;
}

LvlmResponse LvlmResponse::final_text(std::string text)
{
    LvlmResponse r;
    r.text_ = std::move(text);
    return r;
}

LvlmResponse LvlmResponse::tool_calls(std::vector<ToolCall> calls)
{
    if (calls.empty())
        throw Error(ErrorKind::invalid_argument, "a tool-call response needs at least one call");
    LvlmResponse r;
    r.calls_ = std::move(calls);
    return r;
}

json to_json(const LvlmResponse& response)
{
    if (!response.is_tool_calls())
        return {{"final_text", response.text()}};
    json calls = json::array();
    for (const auto& c : response.calls())
        calls.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
    return {{"tool_calls", calls}};
}

LvlmResponse response_from_json(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::invalid_argument, "response entry must be an object");
    if (j.contains("final_text")) {
        if (!j["final_text"].is_string())
            throw Error(ErrorKind::invalid_argument, "final_text must be a string");
        return LvlmResponse::final_text(j["final_text"].get<std::string>());
    }
    if (j.contains("tool_calls") && j["tool_calls"].is_array()) {
        std::vector<ToolCall> calls;
        std::size_t n = 0;
        for (const auto& c : j["tool_calls"]) {
            ToolCall call;
            call.id = c.value("id", "call_" + std::to_string(n));
            call.name = c.at("name").get<std::string>();
            call.arguments = c.value("arguments", json::object());
            calls.push_back(std::move(call));
            ++n;
        }
        return LvlmResponse::tool_calls(std::move(calls));
    }
    throw Error(ErrorKind::invalid_argument, "response entry needs final_text or tool_calls");
}

void validate_history(const std::vector<ChatTurn>& history)
{
    bool seen_non_system = false;
    std::set<std::string> open_calls;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& t = history[i];
        const auto where = " (turn " + std::to_string(i) + ")";
        if (t.role == Role::system) {
            if (seen_non_system)
                throw Error(ErrorKind::invalid_history, "system turn after conversation start" + where);
            continue;
        }
        if (!seen_non_system && t.role != Role::user)
            throw Error(ErrorKind::invalid_history, "first non-system turn must be a user turn" + where);
        seen_non_system = true;
        if (t.role == Role::tool) {
            if (!t.tool_call_id || t.tool_call_id->empty())
                throw Error(ErrorKind::invalid_history, "tool turn without call id" + where);
            if (!open_calls.erase(*t.tool_call_id))
                throw Error(ErrorKind::invalid_history,
                            "tool turn answers unknown call " + *t.tool_call_id + where);
        } else if (t.role == Role::assistant && !t.tool_calls.empty()) {
            for (const auto& c : t.tool_calls)
                open_calls.insert(c.id);
        }
        if (t.parts.empty())
            throw Error(ErrorKind::invalid_history, "turn without content" + where);
    }
    if (!seen_non_system)
        throw Error(ErrorKind::invalid_history, "history has no user turn");
}

LvlmGateway LvlmGateway::from_config(const json& config, const std::filesystem::path& base_dir)
{
    if (!config.is_object() || !config.contains("models") || !config["models"].is_array() ||
        config["models"].empty())
        throw Error(ErrorKind::configuration, "model configuration lists no models");

    LvlmGateway gw;
    for (const auto& m : config["models"]) {
        if (!m.is_object() || !m.contains("id") || !m["id"].is_string() || m["id"].get<std::string>().empty())
            throw Error(ErrorKind::configuration, "model entry needs a non-empty id");
        const auto id = m["id"].get<std::string>();
        const auto provider = m.value("provider", std::string{});
        ModelEntry entry{id, m.value("display_name", id), {}};
        std::shared_ptr<LvlmProvider> backend;
        if (provider == "stub") {
            entry.provider_tag = "stub";
            if (m.contains("script")) {
                std::filesystem::path p = m["script"].get<std::string>();
                if (p.is_relative())
                    p = base_dir / p;
                backend = ScriptedStub::from_file(p);
            } else {
                backend = std::make_shared<ScriptedStub>();
            }
        } else if (provider == "echo") {
            entry.provider_tag = "stub";
            backend = std::make_shared<EchoStub>();
        } else if (provider == "openai") {
            entry.provider_tag = "openai-compatible";
            OpenAiCompatibleConfig oc;
            oc.endpoint = m.value("endpoint", std::string{});
            oc.model = m.value("model", id);
            if (auto env = m.value("api_key_env", std::string{}); !env.empty()) {
                if (const char* key = std::getenv(env.c_str()))
                    oc.api_key = key;
            }
            oc.timeout_seconds = m.value("timeout_seconds", oc.timeout_seconds);
            oc.retries = m.value("retries", oc.retries);
            backend = std::make_shared<OpenAiCompatibleProvider>(std::move(oc));
        } else {
            throw Error(ErrorKind::configuration, "model " + id + " has unknown provider '" + provider + "'");
        }
        gw.register_model(std::move(entry), std::move(backend));
    }
    return gw;
}

void LvlmGateway::register_model(ModelEntry entry, std::shared_ptr<LvlmProvider> provider)
{
    if (!provider)
        throw Error(ErrorKind::configuration, "model " + entry.id + " has no provider");
    if (entry.id.empty())
        throw Error(ErrorKind::configuration, "model id must not be empty");
    if (has_model(entry.id))
        throw Error(ErrorKind::configuration, "duplicate model id " + entry.id);
    models_.emplace_back(std::move(entry), std::move(provider));
}

std::vector<ModelEntry> LvlmGateway::list_models() const
{
    std::vector<ModelEntry> out;
    out.reserve(models_.size());
    for (const auto& [entry, _] : models_)
        out.push_back(entry);
    return out;
}

bool LvlmGateway::has_model(std::string_view id) const
{
    return std::ranges::any_of(models_, [&](const auto& m) { return m.first.id == id; });
}

std::shared_ptr<LvlmProvider> LvlmGateway::provider(std::string_view id) const
{
    for (const auto& [entry, p] : models_)
        if (entry.id == id)
            return p;
    throw Error(ErrorKind::unknown_model, "unknown model " + std::string(id));
}

LvlmResponse LvlmGateway::generate(const std::string& system_prompt, const std::vector<ChatTurn>& history,
                                   const std::vector<ToolSpec>& tools, const std::string& model) const
{
    auto backend = provider(model);
    validate_history(history);
    GenerateRequest req{system_prompt, history, tools, model};
    return backend->generate(req);
}

std::shared_ptr<ScriptedStub> ScriptedStub::from_json(const json& script)
{
    const json& steps = script.is_object() && script.contains("script") ? script["script"] : script;
    if (!steps.is_array())
        throw Error(ErrorKind::configuration, "stub script must be a JSON array");
    auto stub = std::make_shared<ScriptedStub>();
    for (const auto& s : steps) {
        try {
            if (s.contains("error"))
                stub->push(ScriptStep::unreachable(s.value("message", "scripted outage")));
            else if (s.contains("refusal"))
                stub->push(ScriptStep::refusal(s["refusal"].get<std::string>()));
            else
                stub->push(ScriptStep::respond(response_from_json(s)));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::configuration, std::string("bad stub script entry: ") + e.what());
        } catch (const Error& e) {
            throw Error(ErrorKind::configuration, std::string("bad stub script entry: ") + e.what());
        }
    }
    return stub;
}

std::shared_ptr<ScriptedStub> ScriptedStub::from_file(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw Error(ErrorKind::configuration, "cannot read stub script " + path.string());
    }
    auto parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        throw Error(ErrorKind::configuration, "stub script is not valid JSON: " + path.string());
    return from_json(parsed);
}

void ScriptedStub::push(ScriptStep step)
{
    std::lock_guard lock(mutex_);
    steps_.push_back(std::move(step));
}

LvlmResponse ScriptedStub::generate(const GenerateRequest& request)
{
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (next_ >= steps_.size())
        throw Error(ErrorKind::script_exhausted,
                    "scripted stub exhausted after " + std::to_string(steps_.size()) + " responses");
    const auto& step = steps_[next_++];
    switch (step.kind) {
    case ScriptStep::Kind::unreachable: throw Error(ErrorKind::provider_unreachable, step.message);
    case ScriptStep::Kind::refusal: return LvlmResponse::final_text(step.message);
    case ScriptStep::Kind::respond: break;
    }
    return *step.response;
}

std::size_t ScriptedStub::consumed() const
{
    std::lock_guard lock(mutex_);
    return next_;
}

std::size_t ScriptedStub::remaining() const
{
    std::lock_guard lock(mutex_);
    return steps_.size() - next_;
}

std::vector<GenerateRequest> ScriptedStub::requests() const
{
    std::lock_guard lock(mutex_);
    return requests_;
}

LvlmResponse EchoStub::generate(const GenerateRequest& request)
{
    for (auto it = request.history.rbegin(); it != request.history.rend(); ++it)
        if (it->role == Role::user)
            return LvlmResponse::final_text("Echo: " + it->text());
    return LvlmResponse::final_text("Echo:");
}

} // namespace exhibit
