#include "shroud/backends.hpp"

#include "shroud/error.hpp"
#include "shroud/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace shroud {
namespace {

template <typename T>
const T& need(const std::shared_ptr<const T>& backend, BackendRole role)
{
    if (!backend) fail(Errc::BackendMissing, std::string(role_name(role)) + " backend is not configured");
    return *backend;
}

void require_box(const ImageBuffer& img, const BoundingBox& box)
{
    if (box.w < 1 || box.h < 1) fail(Errc::PreconditionViolation, "box has zero area");
    if (!box.within(img.width(), img.height())) fail(Errc::PreconditionViolation, "box lies outside the image");
}

} // namespace

std::string_view role_name(BackendRole role)
{
    switch (role) {
    case BackendRole::Chat: return "chat";
    case BackendRole::Detector: return "detector";
    case BackendRole::Grounder: return "grounder";
    case BackendRole::Segmenter: return "segmenter";
    case BackendRole::Pose: return "pose";
    case BackendRole::Generator: return "generator";
    }
    return "chat";
}

std::optional<BackendRole> parse_role(std::string_view text)
{
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    for (auto r : {BackendRole::Chat, BackendRole::Detector, BackendRole::Grounder, BackendRole::Segmenter,
                   BackendRole::Pose, BackendRole::Generator})
        if (role_name(r) == t) return r;
    return std::nullopt;
}

void BackendConfig::validate() const
{
    const std::string who = std::string(role_name(role)) + " backend: ";
    if (endpoint.empty()) fail(Errc::InvalidParameter, who + "endpoint is empty");
    if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
        fail(Errc::InvalidParameter, who + "endpoint must be an http(s) URL");
    if (!(timeout_seconds > 0)) fail(Errc::InvalidParameter, who + "timeout must be positive");
    if (retry_count < 0 || retry_count > 3) fail(Errc::InvalidParameter, who + "retry_count must be within 0..3");
}

size_t PoseKeypoints::visible_count() const noexcept
{
    return size_t(std::count_if(points.begin(), points.end(), [](const Keypoint& k) { return k.visible; }));
}

void PoseKeypoints::clip_to(uint32_t width, uint32_t height) noexcept
{
    for (auto& k : points)
        if (!std::isfinite(k.x) || !std::isfinite(k.y) || k.x < 0 || k.y < 0 || k.x >= width || k.y >= height)
            k.visible = false;
}

std::string chat_multimodal(const Backends& b, const PromptBundle& bundle)
{
    if (bundle.text.empty()) fail(Errc::PreconditionViolation, "empty prompt");
    return need(b.chat, BackendRole::Chat).chat(bundle);
}

std::vector<Detection> detect_objects(const Backends& b, const ImageBuffer& img)
{
    std::vector<Detection> raw = need(b.detector, BackendRole::Detector).detect(img);
    std::vector<Detection> out;
    for (auto& d : raw) {
        if (!(d.confidence >= 0 && d.confidence <= 1))
            fail(Errc::BackendError, "detection confidence outside [0,1] for '" + d.label + "'");
        try {
            d.box = clamp_box(d.box, img.width(), img.height());
        } catch (const Error&) {
            continue;
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<GroundedBox> ground_phrase(const Backends& b, const ImageBuffer& img, std::string_view phrase)
{
    if (std::all_of(phrase.begin(), phrase.end(), [](unsigned char c) { return std::isspace(c); }))
        fail(Errc::PreconditionViolation, "grounding phrase is empty");
    std::vector<GroundedBox> raw = need(b.grounder, BackendRole::Grounder).ground(img, phrase);
    std::vector<GroundedBox> out;
    for (auto& g : raw) {
        try {
            g.box = clamp_box(g.box, img.width(), img.height());
        } catch (const Error&) {
            continue;
        }
        out.push_back(g);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GroundedBox& a, const GroundedBox& b) { return a.confidence > b.confidence; });
    return out;
}

Contour segment(const Backends& b, const ImageBuffer& img, const BoundingBox& box)
{
    require_box(img, box);
    Contour raw = [&] {
        try {
            return need(b.segmenter, BackendRole::Segmenter).segment(img, box);
        } catch (const Error& e) {
            if (e.code() == Errc::DegenerateContour || e.code() == Errc::SelfIntersectingContour)
                fail(Errc::DegenerateResult, e.detail());
            throw;
        }
    }();

    const double sx = box.w * kSegmentBoxSlack, sy = box.h * kSegmentBoxSlack;
    const double x0 = std::max(0.0, box.x - sx), y0 = std::max(0.0, box.y - sy);
    const double x1 = std::min<double>(img.width(), box.right() + sx);
    const double y1 = std::min<double>(img.height(), box.bottom() + sy);
    auto clamp_ring = [&](std::vector<Point> ring) {
        for (auto& p : ring) {
            p.x = std::clamp(p.x, x0, x1);
            p.y = std::clamp(p.y, y0, y1);
        }
        return ring;
    };
    try {
        std::vector<std::vector<Point>> holes;
        for (const auto& h : raw.holes()) holes.push_back(clamp_ring(h));
        return Contour(clamp_ring(raw.outer()), std::move(holes));
    } catch (const Error& e) {
        fail(Errc::DegenerateResult, "segmentation collapsed after clamping: " + e.detail());
    }
}

PoseKeypoints estimate_pose(const Backends& b, const ImageBuffer& img, const BoundingBox& box)
{
    require_box(img, box);
    PoseKeypoints pose = need(b.pose, BackendRole::Pose).estimate(img, box);
    pose.clip_to(img.width(), img.height());
    return pose;
}

ImageBuffer generate_fill(const Backends& b, const ImageBuffer& img, const RegionMask& mask, std::string_view prompt,
                          const ImageBuffer* reference)
{
    require_same_size(img, mask);
    if (mask.empty()) fail(Errc::PreconditionViolation, "generation mask is empty");
    const auto& gen = need(b.generator, BackendRole::Generator);
    ImageBuffer out = gen.generate({img, mask, std::string(prompt), reference});
    if (out.width() != img.width() || out.height() != img.height())
        fail(Errc::BackendError, "generator returned a differently sized image");
    return out;
}

} // namespace shroud
