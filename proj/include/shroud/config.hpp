#pragma once

// Configuration file shared by the service and the CLI. Schema in README.md.

#include "shroud/backends.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace shroud {

enum class BackendMode { None, Mock, Live };

std::optional<BackendMode> parse_backend_mode(std::string_view text);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    size_t max_image_bytes = 24u * 1024 * 1024;
    int session_ttl_seconds = 1800;
    BackendMode backend = BackendMode::Mock;
    std::string mock_scenario; // path; empty means an empty scenario
    std::vector<BackendConfig> backends;

    // Throws InvalidParameter on unknown keys, bad types, or bad values.
    static ServiceConfig from_json(const nlohmann::json& j);
    static ServiceConfig load(const std::string& path);

    const BackendConfig* find(BackendRole role) const;
};

// Live mode requires at least a chat endpoint.
Backends make_backends(const ServiceConfig& cfg);

} // namespace shroud
