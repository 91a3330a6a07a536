#include "shroud/service.hpp"

#include "shroud/codec.hpp"
#include "shroud/hash.hpp"
#include "shroud/obfuscation.hpp"
#include "shroud/version.hpp"
#include "shroud/wire.hpp"

#include <httplib.h>

#include <atomic>

namespace shroud {

using nlohmann::json;
using nlohmann::ordered_json;

int error_status(Errc code) noexcept
{
    switch (code) {
    case Errc::UnknownSession:
    case Errc::ImageMissing: return 404;
    case Errc::AnalyzeInFlight:
    case Errc::ReportMissing:
    case Errc::NothingToUndo:
    case Errc::NothingToRedo: return 409;
    case Errc::PayloadTooLarge: return 413;
    case Errc::UnsupportedFormat:
    case Errc::CorruptData:
    case Errc::DegenerateContour:
    case Errc::SelfIntersectingContour:
    case Errc::EmptyMask:
    case Errc::DimensionMismatch:
    case Errc::UnknownRiskId:
    case Errc::UnknownElementId:
    case Errc::BoxOutOfBounds:
    case Errc::EmptyReport:
    case Errc::PreconditionViolation:
    case Errc::InvalidParameter:
    case Errc::InsufficientKeypoints:
    case Errc::EmptyPrompt:
    case Errc::NoSelection:
    case Errc::ParseError:
    case Errc::MissingImage:
    case Errc::OutOfRange: return 422;
    case Errc::NotJson:
    case Errc::SchemaViolation:
    case Errc::DuplicateElementConflict:
    case Errc::UnknownTechnique:
    case Errc::CoverageGap:
    case Errc::Transport:
    case Errc::AuthFailure:
    case Errc::Timeout:
    case Errc::BackendError:
    case Errc::SafetyRejection:
    case Errc::DegenerateResult:
    case Errc::NoPersonDetected:
    case Errc::BackendMissing: return 502;
    case Errc::EncodeFailure:
    case Errc::IntegrityFailure:
    case Errc::Io: return 500;
    }
    return 500;
}

SessionStore::SessionStore(Backends backends, std::chrono::seconds ttl) : backends_(std::move(backends)), ttl_(ttl) {}

std::shared_ptr<Session> SessionStore::create()
{
    sweep();
    auto s = std::make_shared<Session>(random_token(16), backends_);
    std::lock_guard lock(mu_);
    sessions_[s->id()] = {s, std::chrono::steady_clock::now()};
    return s;
}

std::shared_ptr<Session> SessionStore::get(const std::string& id)
{
    sweep();
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(Errc::UnknownSession, "no session " + id);
    it->second.last_used = std::chrono::steady_clock::now();
    return it->second.session;
}

size_t SessionStore::size()
{
    std::lock_guard lock(mu_);
    return sessions_.size();
}

size_t SessionStore::sweep(std::chrono::steady_clock::time_point now)
{
    std::lock_guard lock(mu_);
    return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second.last_used > ttl_; });
}

std::string build_multipart(const std::vector<MultipartPart>& parts, const std::string& boundary)
{
    std::string out;
    for (const auto& p : parts) {
        out += "--" + boundary + "\r\n";
        out += "Content-Type: " + p.content_type + "\r\n";
        out += "Content-Disposition: attachment; filename=\"" + p.filename + "\"\r\n\r\n";
        out += p.body;
        out += "\r\n";
    }
    out += "--" + boundary + "--\r\n";
    return out;
}

std::vector<MultipartPart> parse_multipart(const std::string& body, const std::string& boundary)
{
    std::vector<MultipartPart> parts;
    const std::string delim = "--" + boundary;
    size_t pos = body.find(delim);
    while (pos != std::string::npos) {
        pos += delim.size();
        if (body.compare(pos, 2, "--") == 0) break;
        pos += 2; // CRLF
        const size_t head_end = body.find("\r\n\r\n", pos);
        if (head_end == std::string::npos) fail(Errc::CorruptData, "multipart part without headers");
        const std::string head = body.substr(pos, head_end - pos);
        const size_t next = body.find("\r\n" + delim, head_end + 4);
        if (next == std::string::npos) fail(Errc::CorruptData, "unterminated multipart part");
        MultipartPart p;
        p.body = body.substr(head_end + 4, next - head_end - 4);
        size_t h = 0;
        while (h < head.size()) {
            size_t e = head.find("\r\n", h);
            if (e == std::string::npos) e = head.size();
            const std::string line = head.substr(h, e - h);
            if (line.rfind("Content-Type: ", 0) == 0) p.content_type = line.substr(14);
            if (const auto f = line.find("filename=\""); f != std::string::npos)
                p.filename = line.substr(f + 10, line.find('"', f + 10) - f - 10);
            h = e + 2;
        }
        parts.push_back(std::move(p));
        pos = next + 2;
    }
    return parts;
}

struct Service::Impl {
    ServiceConfig config;
    SessionStore store;
    httplib::Server server;
    std::function<void(const std::string&)> log;
    std::atomic<bool> listening{false};

    Impl(ServiceConfig cfg, Backends backends)
        : config(std::move(cfg)), store(std::move(backends), std::chrono::seconds(config.session_ttl_seconds))
    {
    }

    static void send_json(httplib::Response& res, int status, const ordered_json& body)
    {
        res.status = status;
        res.set_content(body.dump(2), "application/json");
    }

    static void send_error(httplib::Response& res, Errc code, const std::string& message)
    {
        send_json(res, error_status(code), {{"error", {{"code", errc_name(code)}, {"message", message}}}});
    }

    static void stamp(httplib::Response& res, const Session& s)
    {
        res.set_header("X-Session-Version", std::to_string(s.version()));
        res.set_header("X-History-Length", std::to_string(s.history().size()));
    }

    static ordered_json state(const Session& s)
    {
        return {{"version", s.version()}, {"history_length", s.history().size()}, {"redo_depth", s.redo_depth()}};
    }

    static json body_json(const httplib::Request& req)
    {
        if (req.body.empty()) return json::object();
        json j = json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail(Errc::InvalidParameter, "request body must be a JSON object");
        return j;
    }

    template <typename F>
    httplib::Server::Handler wrap(F fn)
    {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.detail());
            } catch (const json::exception& e) {
                send_error(res, Errc::InvalidParameter, e.what());
            } catch (const std::exception& e) {
                send_error(res, Errc::Io, e.what());
            }
        };
    }

    std::shared_ptr<Session> session(const httplib::Request& req) { return store.get(req.matches[1]); }

    void routes()
    {
        const std::string S = R"(/v1/sessions/([0-9a-f]+))";

        server.Get("/v1/healthz", wrap([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}, {"version", kToolVersion}});
        }));

        server.Get("/v1/techniques", wrap([](const httplib::Request&, httplib::Response& res) {
            ordered_json arr = ordered_json::array();
            for (Technique t : kAllTechniques) {
                ordered_json j = to_json(technique_attributes(t));
                j["name"] = technique_name(t);
                j["generative"] = is_generative(t);
                j["default_params"] = params_to_json(default_params(t));
                arr.push_back(std::move(j));
            }
            send_json(res, 200, arr);
        }));

        server.Post("/v1/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
            auto s = store.create();
            ordered_json j = {{"id", s->id()}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 201, j);
        }));

        server.Get(S, wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            ordered_json j = {{"id", s->id()}, {"has_image", s->has_image()}, {"has_report", s->report().has_value()}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Post(S + "/image", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            if (req.body.size() > config.max_image_bytes)
                fail(Errc::PayloadTooLarge, "image is " + std::to_string(req.body.size()) + " bytes, limit " +
                                                std::to_string(config.max_image_bytes));
            std::optional<ImageFormat> hint;
            const std::string ct = req.get_header_value("Content-Type");
            if (ct == "image/png") hint = ImageFormat::Png;
            if (ct == "image/jpeg") hint = ImageFormat::Jpeg;
            ImageBuffer img = load_image(
                std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(req.body.data()), req.body.size()), hint);
            const ordered_json info = {{"width", img.width()}, {"height", img.height()}, {"image_hash", image_hash(img)}};
            s->set_image(std::move(img));
            ordered_json j = info;
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Put(S + "/context", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const json b = body_json(req);
            for (const auto& [k, v] : b.items())
                if (k != "intent" && k != "concern") fail(Errc::InvalidParameter, "unknown context field \"" + k + "\"");
            auto text = [&](const char* key) -> std::optional<std::string> {
                if (!b.contains(key) || b.at(key).is_null()) return std::nullopt;
                if (!b.at(key).is_string()) fail(Errc::InvalidParameter, std::string(key) + " must be a string");
                return b.at(key).get<std::string>();
            };
            s->set_context(text("intent"), text("concern"));
            stamp(res, *s);
            send_json(res, 200, state(*s));
        }));

        server.Put(S + "/annotation", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            RegionMask mask = decode_mask_png(
                std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(req.body.data()), req.body.size()));
            const size_t pixels = mask.popcount();
            s->set_concern_mask(std::move(mask));
            ordered_json j = {{"mask_pixels", pixels}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Post(S + "/analyze", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const AnnotatedRiskReport report = s->analyze();
            stamp(res, *s);
            res.set_header("X-Report-Warnings", std::to_string(report.warnings.size()));
            res.status = 200;
            res.set_content(serialize_annotated(report), "application/json");
        }));

        server.Post(S + "/locate", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const Selections sel = s->locate_elements();
            ordered_json j = {{"selections", to_json(sel)}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Post(S + "/apply", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const json b = body_json(req);
            for (const auto& [k, v] : b.items())
                if (k != "risk_id" && k != "element_id" && k != "technique" && k != "params" && k != "instance" &&
                    k != "mask")
                    fail(Errc::InvalidParameter, "unknown apply field \"" + k + "\"");
            if (!b.contains("technique") || !b["technique"].is_string())
                fail(Errc::InvalidParameter, "technique is required");
            const auto technique = parse_technique(b["technique"].get<std::string>());
            if (!technique) fail(Errc::InvalidParameter, "unknown technique \"" + b["technique"].get<std::string>() + "\"");

            ApplyRequest ar;
            ar.technique = *technique;
            auto opt_int = [&](const char* key) -> std::optional<int64_t> {
                if (!b.contains(key) || b.at(key).is_null()) return std::nullopt;
                if (!b.at(key).is_number_integer()) fail(Errc::InvalidParameter, std::string(key) + " must be an integer");
                return b.at(key).get<int64_t>();
            };
            ar.risk_id = opt_int("risk_id");
            ar.element_id = opt_int("element_id");
            if (auto i = opt_int("instance")) {
                if (*i < 0) fail(Errc::InvalidParameter, "instance must be non-negative");
                ar.instance = size_t(*i);
            }
            if (b.contains("params")) ar.params = params_from_json(*technique, b["params"]);
            if (b.contains("mask") && !b["mask"].is_null()) {
                if (!b["mask"].is_string()) fail(Errc::InvalidParameter, "mask must be base64 PNG");
                ar.custom_mask = wire::mask_from_base64_png(b["mask"].get<std::string>());
            }

            EditRecord rec = (ar.risk_id || ar.element_id)
                                 ? s->apply_recommendation(ar)
                                 : [&] {
                                       if (!ar.custom_mask) fail(Errc::NoSelection, "give an element or a mask");
                                       return s->apply_adhoc(ar.technique, *ar.custom_mask,
                                                             ar.params ? *ar.params : default_params(ar.technique));
                                   }();
            ordered_json j = {{"edit", rec.to_json()}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Post(S + "/undo", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            s->undo();
            ordered_json j = {{"image_hash", image_hash(s->current())}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Post(S + "/redo", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            s->redo();
            ordered_json j = {{"image_hash", image_hash(s->current())}};
            j.update(state(*s));
            stamp(res, *s);
            send_json(res, 200, j);
        }));

        server.Get(S + "/image/current", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const auto png = save_image(s->current(), ImageFormat::Png);
            stamp(res, *s);
            res.status = 200;
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        }));

        server.Get(S + "/export", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const std::string tag = req.has_param("format") ? req.get_param_value("format") : "png";
            const auto format = parse_format(tag);
            if (!format) fail(Errc::InvalidParameter, "format must be png or jpeg");
            const ExportResult ex = s->export_image(*format);
            const std::string boundary = "shroud-" + random_token(8);
            const std::string ext = *format == ImageFormat::Png ? "png" : "jpg";
            const std::string body = build_multipart(
                {{*format == ImageFormat::Png ? "image/png" : "image/jpeg", "export." + ext,
                  std::string(ex.image.begin(), ex.image.end())},
                 {"application/json", "export.json", ex.sidecar}},
                boundary);
            stamp(res, *s);
            res.status = 200;
            res.set_content(body, "multipart/mixed; boundary=" + boundary);
        }));

        server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
            if (!log) return;
            log(json{{"method", req.method}, {"path", req.path}, {"status", res.status}, {"bytes", res.body.size()}}.dump());
        });
        server.set_payload_max_length(config.max_image_bytes * 2 + (1u << 20));
    }
};

Service::Service(ServiceConfig config, Backends backends) : impl_(std::make_unique<Impl>(std::move(config), std::move(backends)))
{
    impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port)
{
    // SO_REUSEPORT would let a second process share a port already in use.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen()
{
    impl_->listening = true;
    const bool ok = impl_->server.listen_after_bind();
    impl_->listening = false;
    return ok;
}

void Service::stop()
{
    if (impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

SessionStore& Service::store() { return impl_->store; }

void Service::set_request_log(std::function<void(const std::string&)> sink) { impl_->log = std::move(sink); }

} // namespace shroud
