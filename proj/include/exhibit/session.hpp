// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/agent.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace exhibit {

/// In-memory sessions with TTL expiry and one in-flight run per session.
/// A run works on a private copy of the session and commits it at the end,
/// so history reads never observe a half-finished loop.
class SessionManager {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit SessionManager(std::chrono::seconds ttl, Clock clock = [] { return std::chrono::steady_clock::now(); });

    /// Stores `session` under a fresh unguessable id (written into the
    /// session) and returns the id.
    std::string create(ChatSession session);

    class Lease {
    public:
        ChatSession& session() noexcept { return working_; }
        /// Publishes the working copy and refreshes last_active.
        void commit();

    private:
        friend class SessionManager;
        struct Entry;
        Lease(SessionManager& owner, std::shared_ptr<Entry> entry, std::unique_lock<std::mutex> run_lock);

        SessionManager* owner_;
        std::shared_ptr<Entry> entry_;
        std::unique_lock<std::mutex> run_lock_;
        ChatSession working_;
    };

    /// nullopt when a run is already in flight for the session.
    /// Errors: not_found for unknown or expired ids.
    std::optional<Lease> try_acquire(const std::string& id);

    /// Copy of the committed session. Errors: not_found.
    ChatSession snapshot(const std::string& id);

    bool contains(const std::string& id);
    std::size_t size() const;
    std::chrono::seconds ttl() const noexcept { return ttl_; }

private:
    using Entry = Lease::Entry;
    std::shared_ptr<Entry> find_live(const std::string& id);

    std::chrono::seconds ttl_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

struct SessionManager::Lease::Entry {
    std::mutex run;
    std::mutex data;
    ChatSession session;
};

} // namespace exhibit
