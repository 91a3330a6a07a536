#include "shroud/http_backends.hpp"

#include "shroud/error.hpp"
#include "shroud/prompt.hpp"
#include "shroud/wire.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>

namespace shroud {

using nlohmann::json;

namespace {

std::string truncate(const std::string& s, size_t n = 300) { return s.size() <= n ? s : s.substr(0, n) + "..."; }

const json& field(const json& j, const char* name)
{
    if (!j.is_object() || !j.contains(name)) fail(Errc::BackendError, std::string("reply lacks \"") + name + "\"");
    return j.at(name);
}

} // namespace

HttpEndpoint::HttpEndpoint(BackendConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    const auto scheme_end = cfg_.endpoint.find("://") + 3;
    const auto slash = cfg_.endpoint.find('/', scheme_end);
    origin_ = cfg_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : cfg_.endpoint.substr(slash);
}

json HttpEndpoint::post(const json& body) const
{
    httplib::Headers headers;
    if (!cfg_.token_env.empty()) {
        const char* token = std::getenv(cfg_.token_env.c_str());
        if (!token || !*token) fail(Errc::AuthFailure, "environment variable " + cfg_.token_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    httplib::Client client(origin_);
    const auto secs = std::chrono::duration<double>(cfg_.timeout_seconds);
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(us);
    client.set_read_timeout(us);
    client.set_write_timeout(us);

    const std::string payload = body.dump();
    const std::string who = std::string(role_name(cfg_.role)) + " backend " + cfg_.endpoint;
    Errc last_code = Errc::Transport;
    std::string last_msg;
    for (int attempt = 0; attempt <= cfg_.retry_count; ++attempt) {
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            last_code = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) ? Errc::Timeout : Errc::Transport;
            last_msg = who + ": " + httplib::to_string(err);
            continue;
        }
        if (res->status == 401 || res->status == 403)
            fail(Errc::AuthFailure, who + " rejected credentials (status " + std::to_string(res->status) + ")");
        if (res->status >= 500) {
            last_code = Errc::BackendError;
            last_msg = who + " status " + std::to_string(res->status) + ": " + truncate(res->body);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            fail(Errc::BackendError, who + " status " + std::to_string(res->status) + ": " + truncate(res->body));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) fail(Errc::BackendError, who + " returned non-JSON: " + truncate(res->body));
        return reply;
    }
    fail(last_code, last_msg + " (after " + std::to_string(cfg_.retry_count + 1) + " attempts)");
}

json HttpChat::request_body(const PromptBundle& bundle, const std::string& model)
{
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", bundle.text}});
    for (const auto& im : bundle.images)
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:image/png;base64," + wire::image_to_base64_png(im.image)}}}});
    return {{"model", model}, {"temperature", 0}, {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
}

std::string HttpChat::chat(const PromptBundle& bundle) const
{
    const json reply = ep_.post(request_body(bundle, ep_.config().model));
    try {
        const json& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) fail(Errc::BackendError, "chat reply content is not a string");
        return content.get<std::string>();
    } catch (const json::exception&) {
        fail(Errc::BackendError, "chat reply lacks choices[0].message.content");
    }
}

std::vector<Detection> HttpDetector::detect(const ImageBuffer& img) const
{
    const json reply = ep_.post({{"image_png_base64", wire::image_to_base64_png(img)}});
    const json& list = field(reply, "detections");
    if (!list.is_array()) fail(Errc::BackendError, "\"detections\" is not an array");
    std::vector<Detection> out;
    for (const auto& d : list) out.push_back(wire::detection_from_json(d));
    return out;
}

std::vector<GroundedBox> HttpGrounder::ground(const ImageBuffer& img, std::string_view phrase) const
{
    const json reply = ep_.post({{"image_png_base64", wire::image_to_base64_png(img)}, {"phrase", phrase}});
    const json& list = field(reply, "boxes");
    if (!list.is_array()) fail(Errc::BackendError, "\"boxes\" is not an array");
    std::vector<GroundedBox> out;
    for (const auto& g : list) {
        GroundedBox b{wire::box_from_json(field(g, "box")), 1.0};
        if (g.contains("confidence") && g["confidence"].is_number()) b.confidence = g["confidence"].get<double>();
        out.push_back(b);
    }
    return out;
}

Contour HttpSegmenter::segment(const ImageBuffer& img, const BoundingBox& box) const
{
    const json reply = ep_.post({{"image_png_base64", wire::image_to_base64_png(img)}, {"box", wire::box_to_json(box)}});
    return wire::contour_from_json(field(reply, "contour"));
}

PoseKeypoints HttpPose::estimate(const ImageBuffer& img, const BoundingBox& box) const
{
    const json reply = ep_.post({{"image_png_base64", wire::image_to_base64_png(img)}, {"box", wire::box_to_json(box)}});
    const json& kp = field(reply, "keypoints");
    if (kp.is_null()) fail(Errc::NoPersonDetected, "pose backend found no person in the box");
    return wire::keypoints_from_json(kp);
}

ImageBuffer HttpGenerator::generate(const GenerationRequest& request) const
{
    json body = {{"image_png_base64", wire::image_to_base64_png(request.image)},
                 {"mask_png_base64", wire::mask_to_base64_png(request.mask)},
                 {"prompt", request.prompt}};
    if (request.reference) body["reference_png_base64"] = wire::image_to_base64_png(*request.reference);
    const json reply = ep_.post(body);
    if (reply.is_object() && reply.value("refused", false))
        fail(Errc::SafetyRejection, reply.value("reason", std::string("generation backend refused the prompt")));
    const json& data = field(reply, "image_png_base64");
    if (!data.is_string()) fail(Errc::BackendError, "\"image_png_base64\" is not a string");
    try {
        return wire::image_from_base64(data.get<std::string>());
    } catch (const Error& e) {
        fail(Errc::BackendError, "generated image does not decode: " + e.detail());
    }
}

Backends make_http_backends(const std::vector<BackendConfig>& configs)
{
    Backends b;
    for (const auto& c : configs) {
        switch (c.role) {
        case BackendRole::Chat: b.chat = std::make_shared<HttpChat>(c); break;
        case BackendRole::Detector: b.detector = std::make_shared<HttpDetector>(c); break;
        case BackendRole::Grounder: b.grounder = std::make_shared<HttpGrounder>(c); break;
        case BackendRole::Segmenter: b.segmenter = std::make_shared<HttpSegmenter>(c); break;
        case BackendRole::Pose: b.pose = std::make_shared<HttpPose>(c); break;
        case BackendRole::Generator: b.generator = std::make_shared<HttpGenerator>(c); break;
        }
    }
    return b;
}

} // namespace shroud
