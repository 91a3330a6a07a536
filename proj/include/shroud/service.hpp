#pragma once

// HTTP facade over sessions. Route table and payloads are listed in
// README.md; errors come back as {"error": {"code", "message"}} with the
// status from error_status().

#include "shroud/backends.hpp"
#include "shroud/config.hpp"
#include "shroud/error.hpp"
#include "shroud/session.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace shroud {

int error_status(Errc code) noexcept;

class SessionStore {
public:
    SessionStore(Backends backends, std::chrono::seconds ttl);

    std::shared_ptr<Session> create();
    // Refreshes the idle timer; throws UnknownSession.
    std::shared_ptr<Session> get(const std::string& id);
    size_t size();
    // Drops sessions idle longer than the TTL as of `now`.
    size_t sweep(std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());

private:
    struct Entry {
        std::shared_ptr<Session> session;
        std::chrono::steady_clock::time_point last_used;
    };
    Backends backends_;
    std::chrono::seconds ttl_;
    std::mutex mu_;
    std::unordered_map<std::string, Entry> sessions_;
};

struct MultipartPart {
    std::string content_type;
    std::string filename;
    std::string body;
};

std::string build_multipart(const std::vector<MultipartPart>& parts, const std::string& boundary);
std::vector<MultipartPart> parse_multipart(const std::string& body, const std::string& boundary);

class Service {
public:
    Service(ServiceConfig config, Backends backends);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds without serving; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    // Serves until stop(); returns false if the server failed.
    bool listen();
    void stop();
    bool running() const;
    void wait_until_ready() const;

    SessionStore& store();
    // Receives one JSON line per request.
    void set_request_log(std::function<void(const std::string&)> sink);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace shroud
