// SPDX-License-Identifier: Apache-2.0
#include "exhibit/session.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

namespace exhibit {

SessionManager::SessionManager(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock))
{
    if (ttl_.count() <= 0)
        throw Error(ErrorKind::configuration, "session TTL must be positive");
}

std::string SessionManager::create(ChatSession session)
{
    auto entry = std::make_shared<Entry>();
    const auto now = clock_();
    session.created = session.last_active = now;
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = random_hex(16);
    } while (sessions_.contains(id));
    session.session_id = id;
    entry->session = std::move(session);
    sessions_.emplace(id, std::move(entry));
    return id;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find_live(const std::string& id)
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw Error(ErrorKind::not_found, "unknown session " + id);
    std::chrono::steady_clock::time_point last;
    {
        std::lock_guard data(it->second->data);
        last = it->second->session.last_active;
    }
    if (clock_() - last >= ttl_) {
        sessions_.erase(it);
        throw Error(ErrorKind::not_found, "session " + id + " expired");
    }
    return it->second;
}

SessionManager::Lease::Lease(SessionManager& owner, std::shared_ptr<Entry> entry,
                             std::unique_lock<std::mutex> run_lock)
    : owner_(&owner), entry_(std::move(entry)), run_lock_(std::move(run_lock))
{
    std::lock_guard data(entry_->data);
    entry_->session.last_active = std::max(entry_->session.last_active, owner_->clock_());
    working_ = entry_->session;
}

void SessionManager::Lease::commit()
{
    std::lock_guard data(entry_->data);
    working_.last_active = std::max({working_.last_active, entry_->session.last_active, owner_->clock_()});
    entry_->session = working_;
}

std::optional<SessionManager::Lease> SessionManager::try_acquire(const std::string& id)
{
    auto entry = find_live(id);
    std::unique_lock run(entry->run, std::try_to_lock);
    if (!run.owns_lock())
        return std::nullopt;
    return Lease(*this, std::move(entry), std::move(run));
}

ChatSession SessionManager::snapshot(const std::string& id)
{
    auto entry = find_live(id);
    std::lock_guard data(entry->data);
    return entry->session;
}

bool SessionManager::contains(const std::string& id)
{
    try {
        find_live(id);
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::size_t SessionManager::size() const
{
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

} // namespace exhibit
