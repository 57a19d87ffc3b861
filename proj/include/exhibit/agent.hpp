// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/lvlm.hpp"
#include "exhibit/prompts.hpp"
#include "exhibit/render_tags.hpp"
#include "exhibit/tools.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace exhibit {

struct ChatSession {
    std::string session_id;
    std::string model;
    /// history[0] is the system turn.
    std::vector<ChatTurn> history;
    /// Images the user sent, keyed by content id.
    std::map<std::string, ImageData> uploads;
    std::chrono::steady_clock::time_point created{};
    std::chrono::steady_clock::time_point last_active{};
};

struct TraceEntry {
    std::size_t round = 0;
    ToolCall call;
    ToolOutcome outcome;
};

nlohmann::json to_json(const TraceEntry& entry);

struct AgentReply {
    std::string markdown;
    std::vector<RenderTag> render_tags;
    std::vector<TraceEntry> trace;
    std::vector<RenderTag> dropped_tags;
    std::size_t rounds = 0;
    bool cap_reached = false;
    bool provider_failed = false;
    std::string trace_id;
};

struct AgentConfig {
    std::size_t max_rounds = 8;
    /// Non-system turns sent to the provider, newest kept.
    std::size_t history_turn_budget = 64;
    PromptConfig prompt;
};

/// Receives JSON trace events: turn_appended, tool_dispatched,
/// tool_completed, loop_finished.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void emit(const nlohmann::json& event) = 0;
};

class MemoryTraceSink final : public TraceSink {
public:
    void emit(const nlohmann::json& event) override;
    std::vector<nlohmann::json> events() const;

private:
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> events_;
};

/// Appends one JSON object per line.
class JsonlTraceSink final : public TraceSink {
public:
    explicit JsonlTraceSink(const std::filesystem::path& path);
    void emit(const nlohmann::json& event) override;

private:
    std::mutex mutex_;
    std::ofstream out_;
};

inline constexpr std::string_view cap_reached_message =
    "I'm sorry, I could not finish answering within the allowed number of steps. "
    "Please try rephrasing or narrowing your question.";

class Agent {
public:
    Agent(std::shared_ptr<const LvlmGateway> gateway, std::shared_ptr<const ToolSuite> tools, AgentConfig config = {},
          std::shared_ptr<TraceSink> trace = nullptr);

    /// A fresh session whose history holds only the system turn.
    ChatSession new_session(std::string session_id, std::string model) const;

    /// Runs the generate/dispatch loop for one user turn, appending to
    /// `session.history`. Provider failures end the run with an explanatory
    /// assistant turn; exhausting max_rounds ends it with cap_reached_message.
    /// Errors: invalid_argument (turn not from the user); script_exhausted
    /// propagates.
    AgentReply run(ChatSession& session, ChatTurn user_turn) const;

    /// The history actually sent to the provider: system turn excluded,
    /// truncated oldest-first to the turn budget, starting at a user turn.
    std::vector<ChatTurn> provider_view(const std::vector<ChatTurn>& history) const;

    const std::string& system_prompt() const noexcept { return system_prompt_; }
    const AgentConfig& config() const noexcept { return config_; }
    const ToolSuite& tools() const noexcept { return *tools_; }

private:
    void emit(nlohmann::json event) const;

    std::shared_ptr<const LvlmGateway> gateway_;
    std::shared_ptr<const ToolSuite> tools_;
    AgentConfig config_;
    std::shared_ptr<TraceSink> trace_;
    std::string system_prompt_;
};

/// Adds a user image to the session's uploads and returns the user turn
/// (image part followed by text mentioning the upload id).
ChatTurn make_user_turn(ChatSession& session, const std::string& text, const std::optional<ImageData>& image);

} // namespace exhibit
