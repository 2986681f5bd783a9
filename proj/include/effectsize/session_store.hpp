#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "effectsize/elicitation.hpp"
#include "effectsize/errors.hpp"

namespace effectsize {

// Persistence for elicitation sessions keyed by id.
//
// commit() is a compare-and-swap on the stored log length: a writer that
// advanced from a stale copy fails with ConflictError instead of silently
// overwriting the other writer's transition.
class SessionStore {
public:
    virtual ~SessionStore() = default;

    virtual std::optional<ElicitationSession> find(const std::string& id) const = 0;

    ElicitationSession load(const std::string& id) const {
        auto s = find(id);
        if (!s) throw NotFoundError("no session with id '" + id + "'");
        return *std::move(s);
    }

    // Unconditional write (create or overwrite).
    virtual void save(const ElicitationSession& session) = 0;

    // Writes `session` only if the stored copy's log still has
    // `expected_log_length` entries (0 for a session that does not exist yet).
    virtual void commit(const ElicitationSession& session, std::size_t expected_log_length) = 0;
};

class MemorySessionStore final : public SessionStore {
public:
    std::optional<ElicitationSession> find(const std::string& id) const override {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return std::nullopt;
        return it->second;
    }

    void save(const ElicitationSession& session) override {
        std::lock_guard lock(mutex_);
        sessions_.insert_or_assign(session.id, session);
    }

    void commit(const ElicitationSession& session, std::size_t expected_log_length) override {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(session.id);
        const std::size_t current = it == sessions_.end() ? 0 : it->second.log.size();
        if (current != expected_log_length)
            throw ConflictError("session '" + session.id + "' was modified concurrently");
        sessions_.insert_or_assign(session.id, session);
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, ElicitationSession> sessions_;
};

// One append-only JSON Lines file per session: every write appends the full
// session document, and the last line is the current state.
class FileSessionStore final : public SessionStore {
public:
    explicit FileSessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::optional<ElicitationSession> find(const std::string& id) const override {
        std::lock_guard lock(mutex_);
        return read_locked(id);
    }

    void save(const ElicitationSession& session) override {
        std::lock_guard lock(mutex_);
        append_locked(session);
    }

    void commit(const ElicitationSession& session, std::size_t expected_log_length) override {
        std::lock_guard lock(mutex_);
        const auto current = read_locked(session.id);
        const std::size_t length = current ? current->log.size() : 0;
        if (length != expected_log_length)
            throw ConflictError("session '" + session.id + "' was modified concurrently");
        append_locked(session);
    }

    const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    static void check_id(const std::string& id) {
        if (id.empty() || id.size() > 128) throw ValidationError("invalid session id", "id");
        for (char c : id)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'))
                throw ValidationError("session id may hold only letters, digits, '-' and '_'", "id");
    }

    std::filesystem::path path_for(const std::string& id) const {
        check_id(id);
        return dir_ / (id + ".jsonl");
    }

    std::optional<ElicitationSession> read_locked(const std::string& id) const {
        std::ifstream in(path_for(id));
        if (!in) return std::nullopt;
        std::string line, last;
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        if (last.empty()) return std::nullopt;
        return session_from_json(json::parse(last));
    }

    void append_locked(const ElicitationSession& session) {
        std::ofstream out(path_for(session.id), std::ios::app);
        if (!out) throw std::runtime_error("cannot write session file for '" + session.id + "'");
        out << to_json(session).dump() << '\n';
        out.flush();
        if (!out) throw std::runtime_error("failed writing session file for '" + session.id + "'");
    }

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

// Standalone session documents (CLI wizard, golden files).
inline void save_session_file(const std::filesystem::path& path, const ElicitationSession& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(s).dump(2) << '\n';
}

inline ElicitationSession load_session_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("no session file at " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("session file is not valid JSON: ") + e.what(), "session");
    }
    return session_from_json(j);
}

} // namespace effectsize
