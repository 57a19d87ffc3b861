// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/images.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace exhibit {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);

/// One piece of an interleaved text/image message. Images are held by
/// reference (shared bytes + content id).
class ChatPart {
public:
    static ChatPart text(std::string s) { return ChatPart(std::move(s)); }
    static ChatPart image(ImageData img) { return ChatPart(std::move(img)); }

    bool is_text() const noexcept { return std::holds_alternative<std::string>(content_); }
    bool is_image() const noexcept { return std::holds_alternative<ImageData>(content_); }
    const std::string& as_text() const { return std::get<std::string>(content_); }
    const ImageData& as_image() const { return std::get<ImageData>(content_); }

private:
    explicit ChatPart(std::variant<std::string, ImageData> c) : content_(std::move(c)) {}
    std::variant<std::string, ImageData> content_;
};

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();
};

struct ChatTurn {
    Role role = Role::user;
    std::vector<ChatPart> parts;
    /// Set on tool turns: the id of the call this turn answers.
    std::optional<std::string> tool_call_id;
    /// Set on assistant turns that requested tools.
    std::vector<ToolCall> tool_calls;

    static ChatTurn system(std::string text);
    static ChatTurn user(std::string text);
    static ChatTurn user(std::vector<ChatPart> parts);
    static ChatTurn assistant(std::string text);
    static ChatTurn assistant_calls(std::vector<ToolCall> calls);
    static ChatTurn tool(std::string call_id, std::string content);

    /// Concatenation of all text parts.
    std::string text() const;
    std::vector<ImageData> images() const;
};

enum class ParamType { string, integer, number, boolean, enumeration };

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::string;
    std::string description;
    bool required = false;
    std::vector<std::string> enum_values;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;

    /// JSON-schema "function parameters" object as used by function-calling
    /// APIs.
    nlohmann::json parameters_schema() const;
    nlohmann::json to_json() const;
};

/// Checks a call's arguments against its ToolSpec: object shape, no unknown
/// keys, required present, types and enum membership. Returns a message
/// describing the first problem, or nullopt when valid.
std::optional<std::string> validate_arguments(const ToolSpec& spec, const nlohmann::json& arguments);

/// Either a non-empty list of tool calls or a final text, never both.
class LvlmResponse {
public:
    static LvlmResponse final_text(std::string text);
    /// Throws Error(invalid_argument) for an empty list.
    static LvlmResponse tool_calls(std::vector<ToolCall> calls);

    bool is_tool_calls() const noexcept { return !calls_.empty(); }
    const std::vector<ToolCall>& calls() const noexcept { return calls_; }
    const std::string& text() const noexcept { return text_; }

private:
    LvlmResponse() = default;
    std::vector<ToolCall> calls_;
    std::string text_;
};

nlohmann::json to_json(const LvlmResponse& response);
LvlmResponse response_from_json(const nlohmann::json& j);

struct GenerateRequest {
    std::string system_prompt;
    std::vector<ChatTurn> history;
    std::vector<ToolSpec> tools;
    std::string model;
};

/// A backend able to answer one generation request. Implementations map
/// refusals and content-filter blocks to final_text and raise
/// provider_unreachable for transport failures.
class LvlmProvider {
public:
    virtual ~LvlmProvider() = default;
    virtual LvlmResponse generate(const GenerateRequest& request) = 0;
};

struct ModelEntry {
    std::string id;
    std::string display_name;
    std::string provider_tag;

    bool operator==(const ModelEntry&) const = default;
};

/// Model registry plus dispatch. Registration happens before serving; after
/// that the gateway is read-only and safe for concurrent use.
class LvlmGateway {
public:
    LvlmGateway() = default;

    /// Builds the registry from {"models":[...]} (see docs/CONFIG.md).
    /// Relative script paths resolve against `base_dir`.
    /// Errors: configuration (empty list, unknown provider, bad entry).
    static LvlmGateway from_config(const nlohmann::json& config,
                                   const std::filesystem::path& base_dir = {});

    /// Errors: configuration (duplicate id, null provider).
    void register_model(ModelEntry entry, std::shared_ptr<LvlmProvider> provider);

    std::vector<ModelEntry> list_models() const;
    bool has_model(std::string_view id) const;
    std::shared_ptr<LvlmProvider> provider(std::string_view id) const;

    /// Errors: unknown_model, invalid_history, provider_unreachable.
    LvlmResponse generate(const std::string& system_prompt, const std::vector<ChatTurn>& history,
                          const std::vector<ToolSpec>& tools, const std::string& model) const;

private:
    std::vector<std::pair<ModelEntry, std::shared_ptr<LvlmProvider>>> models_;
};

/// Throws Error(invalid_history) unless the first non-system turn is a user
/// turn, tool turns carry a correlation id, and each turn has content.
void validate_history(const std::vector<ChatTurn>& history);

struct ScriptStep {
    enum class Kind { respond, unreachable, refusal };
    Kind kind = Kind::respond;
    std::optional<LvlmResponse> response;
    std::string message;

    static ScriptStep respond(LvlmResponse r) { return {Kind::respond, std::move(r), {}}; }
    static ScriptStep unreachable(std::string msg = "scripted outage") { return {Kind::unreachable, std::nullopt, std::move(msg)}; }
    static ScriptStep refusal(std::string msg) { return {Kind::refusal, std::nullopt, std::move(msg)}; }
};

/// Replays canned responses strictly in order and records every request.
/// Asking for more generations than scripted raises script_exhausted, which
/// callers must never swallow.
///
/// Fixture format: a JSON array (or {"script":[...]}) of
///   {"final_text": "..."} | {"tool_calls":[{"id","name","arguments"}]}
///   | {"error":"provider_unreachable","message":"..."} | {"refusal":"..."}
class ScriptedStub final : public LvlmProvider {
public:
    ScriptedStub() = default;
    explicit ScriptedStub(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {}

    static std::shared_ptr<ScriptedStub> from_json(const nlohmann::json& script);
    static std::shared_ptr<ScriptedStub> from_file(const std::filesystem::path& path);

    void push(ScriptStep step);
    LvlmResponse generate(const GenerateRequest& request) override;

    std::size_t consumed() const;
    std::size_t remaining() const;
    std::vector<GenerateRequest> requests() const;

private:
    mutable std::mutex mutex_;
    std::vector<ScriptStep> steps_;
    std::size_t next_ = 0;
    std::vector<GenerateRequest> requests_;
};

/// Answers every request with "Echo: <last user text>". Stateless.
class EchoStub final : public LvlmProvider {
public:
    LvlmResponse generate(const GenerateRequest& request) override;
};

struct OpenAiCompatibleConfig {
    std::string endpoint; // e.g. https://api.openai.com/v1
    std::string model;    // vendor model name
    std::string api_key;
    int timeout_seconds = 120;
    int retries = 2;
};

/// Adapter for chat-completions style APIs (OpenAI and the many vendors and
/// local runtimes that speak the same wire format).
class OpenAiCompatibleProvider final : public LvlmProvider {
public:
    explicit OpenAiCompatibleProvider(OpenAiCompatibleConfig config);
    LvlmResponse generate(const GenerateRequest& request) override;

private:
    OpenAiCompatibleConfig config_;
    std::string scheme_host_port_;
    std::string base_path_;
};

/// Wire translation, exposed for tests.
nlohmann::json to_openai_request(const GenerateRequest& request, const std::string& vendor_model);
LvlmResponse from_openai_response(const nlohmann::json& body);

} // namespace exhibit
