#include "shroud/config.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/http_backends.hpp"
#include "shroud/mock_backends.hpp"

#include <set>

namespace shroud {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(Errc::InvalidParameter, "config: " + what); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) bad(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) bad("unknown key \"" + k + "\" in " + where);
}

template <typename T>
T get(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(where + "." + key + " has the wrong type");
    }
}

} // namespace

std::optional<BackendMode> parse_backend_mode(std::string_view text)
{
    if (text == "none") return BackendMode::None;
    if (text == "mock") return BackendMode::Mock;
    if (text == "live") return BackendMode::Live;
    return std::nullopt;
}

ServiceConfig ServiceConfig::from_json(const json& j)
{
    check_keys(j, {"host", "port", "max_image_bytes", "session_ttl_seconds", "backend", "mock_scenario", "backends"}, "config");
    ServiceConfig c;
    c.host = get<std::string>(j, "host", c.host, "config");
    c.port = get<int>(j, "port", c.port, "config");
    c.max_image_bytes = get<size_t>(j, "max_image_bytes", c.max_image_bytes, "config");
    c.session_ttl_seconds = get<int>(j, "session_ttl_seconds", c.session_ttl_seconds, "config");
    const auto mode = get<std::string>(j, "backend", "mock", "config");
    const auto parsed = parse_backend_mode(mode);
    if (!parsed) bad("backend must be none, mock, or live");
    c.backend = *parsed;
    c.mock_scenario = get<std::string>(j, "mock_scenario", "", "config");
    if (c.port < 0 || c.port > 65535) bad("port out of range");
    if (c.max_image_bytes == 0) bad("max_image_bytes must be positive");
    if (c.session_ttl_seconds <= 0) bad("session_ttl_seconds must be positive");

    if (j.contains("backends")) {
        check_keys(j.at("backends"), {"chat", "detector", "grounder", "segmenter", "pose", "generator"}, "backends");
        for (const auto& [name, b] : j.at("backends").items()) {
            const std::string where = "backends." + name;
            check_keys(b, {"endpoint", "token_env", "model", "timeout_seconds", "retry_count"}, where);
            BackendConfig bc;
            bc.role = *parse_role(name);
            bc.endpoint = get<std::string>(b, "endpoint", "", where);
            bc.token_env = get<std::string>(b, "token_env", "", where);
            bc.model = get<std::string>(b, "model", "", where);
            bc.timeout_seconds = get<double>(b, "timeout_seconds", bc.timeout_seconds, where);
            bc.retry_count = get<int>(b, "retry_count", bc.retry_count, where);
            bc.validate();
            c.backends.push_back(bc);
        }
    }
    return c;
}

ServiceConfig ServiceConfig::load(const std::string& path)
{
    std::vector<uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        bad(e.detail());
    }
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) bad(path + " is not valid JSON");
    return from_json(j);
}

const BackendConfig* ServiceConfig::find(BackendRole role) const
{
    for (const auto& b : backends)
        if (b.role == role) return &b;
    return nullptr;
}

Backends make_backends(const ServiceConfig& cfg)
{
    switch (cfg.backend) {
    case BackendMode::None: return {};
    case BackendMode::Mock: {
        auto scenario = std::make_shared<MockScenario>(cfg.mock_scenario.empty() ? MockScenario{}
                                                                                 : MockScenario::load(cfg.mock_scenario));
        return make_mock_backends(std::move(scenario)).backends;
    }
    case BackendMode::Live:
        if (!cfg.find(BackendRole::Chat)) bad("live backend mode needs backends.chat.endpoint");
        return make_http_backends(cfg.backends);
    }
    return {};
}

} // namespace shroud
