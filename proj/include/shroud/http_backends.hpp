#pragma once

// HTTP clients for the backend roles. Chat speaks the OpenAI-compatible
// chat-completions format; the other roles use the JSON contract in
// docs/wire.md.

#include "shroud/backends.hpp"

#include <json.hpp>

namespace shroud {

// One configured endpoint with bearer auth, timeouts, and bounded retries.
class HttpEndpoint {
public:
    explicit HttpEndpoint(BackendConfig cfg);

    // POSTs `body` and returns the parsed JSON reply. Transport failures,
    // timeouts, and 5xx replies are retried up to retry_count more times.
    nlohmann::json post(const nlohmann::json& body) const;
    const BackendConfig& config() const noexcept { return cfg_; }

private:
    BackendConfig cfg_;
    std::string origin_; // scheme://host[:port]
    std::string path_;
};

class HttpChat : public ChatBackend {
public:
    explicit HttpChat(BackendConfig cfg) : ep_(std::move(cfg)) {}
    std::string chat(const PromptBundle& bundle) const override;

    static nlohmann::json request_body(const PromptBundle& bundle, const std::string& model);

private:
    HttpEndpoint ep_;
};

class HttpDetector : public DetectorBackend {
public:
    explicit HttpDetector(BackendConfig cfg) : ep_(std::move(cfg)) {}
    std::vector<Detection> detect(const ImageBuffer& img) const override;

private:
    HttpEndpoint ep_;
};

class HttpGrounder : public GrounderBackend {
public:
    explicit HttpGrounder(BackendConfig cfg) : ep_(std::move(cfg)) {}
    std::vector<GroundedBox> ground(const ImageBuffer& img, std::string_view phrase) const override;

private:
    HttpEndpoint ep_;
};

class HttpSegmenter : public SegmenterBackend {
public:
    explicit HttpSegmenter(BackendConfig cfg) : ep_(std::move(cfg)) {}
    Contour segment(const ImageBuffer& img, const BoundingBox& box) const override;

private:
    HttpEndpoint ep_;
};

class HttpPose : public PoseBackend {
public:
    explicit HttpPose(BackendConfig cfg) : ep_(std::move(cfg)) {}
    PoseKeypoints estimate(const ImageBuffer& img, const BoundingBox& box) const override;

private:
    HttpEndpoint ep_;
};

class HttpGenerator : public GeneratorBackend {
public:
    explicit HttpGenerator(BackendConfig cfg) : ep_(std::move(cfg)) {}
    ImageBuffer generate(const GenerationRequest& request) const override;

private:
    HttpEndpoint ep_;
};

// Builds clients for the configured roles; unconfigured roles stay null.
Backends make_http_backends(const std::vector<BackendConfig>& configs);

} // namespace shroud
