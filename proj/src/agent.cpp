// SPDX-License-Identifier: Apache-2.0
#include "exhibit/agent.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

namespace exhibit {

using nlohmann::json;

json to_json(const TraceEntry& entry)
{
    json j = {{"round", entry.round},
              {"call_id", entry.call.id},
              {"name", entry.call.name},
              {"arguments", entry.call.arguments},
              {"ok", entry.outcome.ok}};
    if (!entry.outcome.ok) {
        j["error_kind"] = entry.outcome.error_kind;
        j["detail"] = entry.outcome.detail;
    }
    return j;
}

void MemoryTraceSink::emit(const json& event)
{
    std::lock_guard lock(mutex_);
    events_.push_back(event);
}

std::vector<json> MemoryTraceSink::events() const
{
    std::lock_guard lock(mutex_);
    return events_;
}

JsonlTraceSink::JsonlTraceSink(const std::filesystem::path& path) : out_(path, std::ios::app)
{
    if (!out_)
        throw Error(ErrorKind::io, "cannot open trace log " + path.string());
}

void JsonlTraceSink::emit(const json& event)
{
    std::lock_guard lock(mutex_);
    out_ << event.dump() << '\n';
    out_.flush();
}

Agent::Agent(std::shared_ptr<const LvlmGateway> gateway, std::shared_ptr<const ToolSuite> tools, AgentConfig config,
             std::shared_ptr<TraceSink> trace)
    : gateway_(std::move(gateway)), tools_(std::move(tools)), config_(std::move(config)), trace_(std::move(trace))
{
    if (!gateway_ || !tools_)
        throw Error(ErrorKind::configuration, "agent needs a gateway and a tool suite");
    if (config_.max_rounds == 0 || config_.history_turn_budget == 0)
        throw Error(ErrorKind::configuration, "agent round cap and turn budget must be positive");
    system_prompt_ = build_system_prompt(config_.prompt, tools_->environment().prompts);
}

ChatSession Agent::new_session(std::string session_id, std::string model) const
{
    ChatSession s;
    s.session_id = std::move(session_id);
    s.model = std::move(model);
    s.history.push_back(ChatTurn::system(system_prompt_));
    s.created = s.last_active = std::chrono::steady_clock::now();
    return s;
}

std::vector<ChatTurn> Agent::provider_view(const std::vector<ChatTurn>& history) const
{
    std::size_t first = 0;
    while (first < history.size() && history[first].role == Role::system)
        ++first;
    std::size_t last_user = history.size();
    for (std::size_t i = history.size(); i > first; --i)
        if (history[i - 1].role == Role::user) {
            last_user = i - 1;
            break;
        }

    std::size_t start = history.size() - std::min(history.size() - first, config_.history_turn_budget);
    while (start < history.size() && history[start].role != Role::user)
        ++start;
    start = std::min(start, last_user);
    return {history.begin() + static_cast<std::ptrdiff_t>(start), history.end()};
}

void Agent::emit(json event) const
{
    if (trace_)
        trace_->emit(event);
}

ChatTurn make_user_turn(ChatSession& session, const std::string& text, const std::optional<ImageData>& image)
{
    if (!image)
        return ChatTurn::user(text);
    session.uploads[image->content_id()] = *image;
    std::vector<ChatPart> parts{ChatPart::image(*image),
                                ChatPart::text("[uploaded image id: " + image->content_id() + "]\n" + text)};
    return ChatTurn::user(std::move(parts));
}

AgentReply Agent::run(ChatSession& session, ChatTurn user_turn) const
{
    if (user_turn.role != Role::user || user_turn.parts.empty())
        throw Error(ErrorKind::invalid_argument, "agent input must be a non-empty user turn");
    if (session.history.empty() || session.history.front().role != Role::system)
        throw Error(ErrorKind::invalid_history, "session history must start with the system turn");

    AgentReply reply;
    reply.trace_id = random_hex(8);
    const auto& sid = session.session_id;
    auto append = [&](ChatTurn turn) {
        session.history.push_back(std::move(turn));
        emit({{"event", "turn_appended"},
              {"session_id", sid},
              {"trace_id", reply.trace_id},
              {"role", to_string(session.history.back().role)},
              {"index", session.history.size() - 1}});
    };

    append(std::move(user_turn));
    std::vector<ToolSpec> specs = tools_->specs();
    std::set<std::string> disabled;
    const DispatchContext ctx{session.model, &session.uploads};
    const auto& system_text = session.history.front().parts.empty() ? system_prompt_ : session.history.front().text();

    while (true) {
        if (reply.rounds == config_.max_rounds) {
            reply.cap_reached = true;
            reply.markdown = std::string(cap_reached_message);
            append(ChatTurn::assistant(reply.markdown));
            break;
        }
        ++reply.rounds;

        std::optional<LvlmResponse> response;
        try {
            response = gateway_->generate(system_text, provider_view(session.history), specs, session.model);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::script_exhausted)
                throw;
            spdlog::warn("session {}: model call failed: {}", sid, e.what());
            reply.provider_failed = true;
            reply.markdown = "I'm sorry, the language model could not be reached (" + std::string(to_string(e.kind())) +
                             "). Please try again in a moment.";
            append(ChatTurn::assistant(reply.markdown));
            break;
        }

        if (!response->is_tool_calls()) {
            const auto parsed = parse_render_tags(response->text());
            const auto& catalog = tools_->catalog();
            auto kept = filter_render_tags(
                parsed,
                [&](const RenderTag& t) {
                    return t.kind == RenderKind::record ? catalog.find_record(t.murag_id) != nullptr
                                                        : catalog.find_collection(t.murag_id.value()) != nullptr;
                },
                &reply.dropped_tags);
            for (const auto& t : reply.dropped_tags)
                spdlog::warn("session {}: dropped render tag for unknown id {}", sid, t.murag_id.value());
            reply.markdown = reply.dropped_tags.empty() ? response->text() : kept.render();
            reply.render_tags = std::move(kept.tags);
            append(ChatTurn::assistant(reply.markdown));
            break;
        }

        append(ChatTurn::assistant_calls(response->calls()));
        for (const auto& call : response->calls()) {
            emit({{"event", "tool_dispatched"},
                  {"session_id", sid},
                  {"trace_id", reply.trace_id},
                  {"round", reply.rounds},
                  {"call_id", call.id},
                  {"name", call.name},
                  {"arguments", call.arguments}});
            ToolOutcome outcome;
            if (disabled.contains(call.name)) {
                outcome.ok = false;
                outcome.error_kind = "tool_disabled";
                outcome.detail = "tool " + call.name + " failed earlier in this turn and is disabled";
            } else {
                outcome = tools_->dispatch(call, ctx);
            }
            if (!outcome.ok && !outcome.parameter_error() && disabled.insert(call.name).second)
                std::erase_if(specs, [&](const ToolSpec& s) { return s.name == call.name; });
            emit({{"event", "tool_completed"},
                  {"session_id", sid},
                  {"trace_id", reply.trace_id},
                  {"round", reply.rounds},
                  {"call_id", call.id},
                  {"name", call.name},
                  {"ok", outcome.ok},
                  {"error_kind", outcome.error_kind}});
            append(ChatTurn::tool(call.id, outcome.message()));
            reply.trace.push_back({reply.rounds, call, std::move(outcome)});
        }
    }

    json tags = json::array();
    for (const auto& t : reply.render_tags)
        tags.push_back(t.serialize());
    json dropped = json::array();
    for (const auto& t : reply.dropped_tags)
        dropped.push_back(t.serialize());
    emit({{"event", "loop_finished"},
          {"session_id", sid},
          {"trace_id", reply.trace_id},
          {"rounds", reply.rounds},
          {"tool_calls", reply.trace.size()},
          {"cap_reached", reply.cap_reached},
          {"provider_failed", reply.provider_failed},
          {"render_tags", tags},
          {"dropped_tags", dropped}});
    return reply;
}

} // namespace exhibit
