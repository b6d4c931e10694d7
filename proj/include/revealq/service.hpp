#pragma once

// HTTP+JSON front end over a SessionStore.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "revealq/session.hpp"

namespace revealq {

struct ServiceOptions {
    std::filesystem::path sessions_dir;
    SessionLimits limits;
    std::int64_t ttl_seconds = 24 * 3600;
    bool debug_panel = false;  // enables GET /sessions/{id}/debug
};

// Maps a library error code onto an HTTP status.
int http_status_for(const std::string& code);

class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds without serving yet. Port 0 picks a free port. Returns the bound
    // port; throws Error("bind_failed") when the address is unavailable.
    int bind(const std::string& host, int port);
    // Serves until stop() is called.
    void run();
    void stop();

    SessionStore& store();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace revealq
