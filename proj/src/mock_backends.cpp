#include "shroud/mock_backends.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/hash.hpp"
#include "shroud/prompt.hpp"
#include "shroud/wire.hpp"

#include <algorithm>
#include <cctype>

namespace shroud {

using nlohmann::json;

namespace {

std::string normalize_phrase(std::string_view text)
{
    std::string s;
    bool space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            space = !s.empty();
            continue;
        }
        if (space) s.push_back(' ');
        space = false;
        s.push_back(char(std::tolower(c)));
    }
    return s;
}

double iou(const BoundingBox& a, const BoundingBox& b)
{
    const int64_t x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const int64_t x1 = std::min(a.right(), b.right()), y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return 0;
    const double inter = double(x1 - x0) * double(y1 - y0);
    return inter / (double(a.w) * a.h + double(b.w) * b.h - inter);
}

template <typename T>
const T* best_match(const std::vector<std::pair<BoundingBox, T>>& items, const BoundingBox& box)
{
    const T* best = nullptr;
    double best_iou = 0.5;
    for (const auto& [b, v] : items) {
        const double o = iou(b, box);
        if (o >= best_iou) {
            best_iou = o;
            best = &v;
        }
    }
    return best;
}

std::vector<std::string> text_list(const json& j)
{
    if (j.is_string()) return {j.get<std::string>()};
    std::vector<std::string> out;
    for (const auto& s : j) out.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    return out;
}

} // namespace

MockScenario MockScenario::from_json(const json& j)
{
    MockScenario s;
    try {
        if (j.contains("images"))
            for (const auto& [hash, fx] : j.at("images").items()) {
                MockImageFixture f;
                if (fx.contains("detections"))
                    for (const auto& d : fx.at("detections")) f.detections.push_back(wire::detection_from_json(d));
                if (fx.contains("grounding"))
                    for (const auto& [phrase, boxes] : fx.at("grounding").items()) {
                        auto& list = f.grounding[normalize_phrase(phrase)];
                        for (const auto& g : boxes)
                            list.push_back({wire::box_from_json(g.at("box")), g.value("confidence", 1.0)});
                    }
                if (fx.contains("segments"))
                    for (const auto& sg : fx.at("segments"))
                        f.segments.emplace_back(wire::box_from_json(sg.at("box")), wire::contour_from_json(sg.at("contour")));
                if (fx.contains("poses"))
                    for (const auto& p : fx.at("poses"))
                        f.poses.emplace_back(wire::box_from_json(p.at("box")), wire::keypoints_from_json(p.at("keypoints")));
                if (fx.contains("identification")) f.identification = text_list(fx.at("identification"));
                if (fx.contains("recommendation")) f.recommendation = text_list(fx.at("recommendation"));
                s.images.emplace(hash, std::move(f));
            }
        if (j.contains("chat"))
            for (const auto& [hash, text] : j.at("chat").items()) s.chat[hash] = text_list(text).front();
        if (j.contains("generator") && j.at("generator").contains("refuse_prompts"))
            for (const auto& t : j.at("generator").at("refuse_prompts"))
                s.refused_prompt_terms.push_back(normalize_phrase(t.get<std::string>()));
        if (j.contains("default_chat_reply")) s.default_chat_reply = j.at("default_chat_reply").get<std::string>();
    } catch (const json::exception& e) {
        fail(Errc::InvalidParameter, std::string("mock scenario: ") + e.what());
    } catch (const Error& e) {
        fail(Errc::InvalidParameter, "mock scenario: " + e.detail());
    }
    return s;
}

MockScenario MockScenario::load(const std::string& path)
{
    const auto bytes = read_file(path);
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) fail(Errc::InvalidParameter, "mock scenario " + path + " is not JSON");
    return from_json(j);
}

json MockScenario::to_json() const
{
    json images = json::object();
    for (const auto& [hash, f] : this->images) {
        json fx = json::object();
        json dets = json::array();
        for (const auto& d : f.detections) dets.push_back(wire::detection_to_json(d));
        fx["detections"] = dets;
        json grounding = json::object();
        for (const auto& [phrase, boxes] : f.grounding) {
            json list = json::array();
            for (const auto& g : boxes) list.push_back({{"box", wire::box_to_json(g.box)}, {"confidence", g.confidence}});
            grounding[phrase] = list;
        }
        fx["grounding"] = grounding;
        json segs = json::array();
        for (const auto& [b, c] : f.segments) segs.push_back({{"box", wire::box_to_json(b)}, {"contour", wire::contour_to_json(c)}});
        fx["segments"] = segs;
        json poses = json::array();
        for (const auto& [b, k] : f.poses) poses.push_back({{"box", wire::box_to_json(b)}, {"keypoints", wire::keypoints_to_json(k)}});
        fx["poses"] = poses;
        fx["identification"] = f.identification;
        fx["recommendation"] = f.recommendation;
        images[hash] = fx;
    }
    json out = {{"images", images}, {"chat", chat}, {"generator", {{"refuse_prompts", refused_prompt_terms}}}};
    if (default_chat_reply != "[]") out["default_chat_reply"] = default_chat_reply;
    return out;
}

std::string MockChat::chat(const PromptBundle& bundle) const
{
    std::lock_guard lock(mu_);
    ++calls_;
    if (auto it = scenario_->chat.find(bundle_hash(bundle)); it != scenario_->chat.end()) return it->second;

    const std::string original = bundle_original_hash(bundle);
    if (auto it = scenario_->images.find(original); it != scenario_->images.end()) {
        const auto& list = bundle.expected == ResponseSchema::RiskReportV1 ? it->second.identification
                                                                            : it->second.recommendation;
        if (!list.empty()) {
            size_t& cur = cursor_[original + "/" + std::string(schema_name(bundle.expected))];
            const std::string& reply = list[std::min(cur, list.size() - 1)];
            ++cur;
            return reply;
        }
    }
    return scenario_->default_chat_reply;
}

size_t MockChat::calls() const
{
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<Detection> MockDetector::detect(const ImageBuffer& img) const
{
    auto it = scenario_->images.find(image_hash(img));
    return it == scenario_->images.end() ? std::vector<Detection>{} : it->second.detections;
}

std::vector<GroundedBox> MockGrounder::ground(const ImageBuffer& img, std::string_view phrase) const
{
    auto it = scenario_->images.find(image_hash(img));
    if (it == scenario_->images.end()) return {};
    auto g = it->second.grounding.find(normalize_phrase(phrase));
    return g == it->second.grounding.end() ? std::vector<GroundedBox>{} : g->second;
}

Contour MockSegmenter::segment(const ImageBuffer& img, const BoundingBox& box) const
{
    if (auto it = scenario_->images.find(image_hash(img)); it != scenario_->images.end())
        if (const Contour* c = best_match(it->second.segments, box)) return *c;
    const double x0 = box.x, y0 = box.y, x1 = box.right(), y1 = box.bottom();
    return Contour({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

PoseKeypoints MockPose::estimate(const ImageBuffer& img, const BoundingBox& box) const
{
    if (auto it = scenario_->images.find(image_hash(img)); it != scenario_->images.end())
        if (const PoseKeypoints* k = best_match(it->second.poses, box)) return *k;
    fail(Errc::NoPersonDetected, "no person found in the selected box");
}

ImageBuffer MockGenerator::checkerboard(uint32_t width, uint32_t height, std::string_view prompt)
{
    const uint64_t seed = fnv1a64(prompt);
    const Rgba a{uint8_t(seed), uint8_t(seed >> 8), uint8_t(seed >> 16), 255};
    Rgba b{uint8_t(seed >> 24), uint8_t(seed >> 32), uint8_t(seed >> 40), 255};
    if (a == b) b.r ^= 0x80;
    ImageBuffer out(width, height);
    for (uint32_t y = 0; y < height; ++y)
        for (uint32_t x = 0; x < width; ++x) out.set(x, y, ((x / 4 + y / 4) & 1) ? b : a);
    return out;
}

ImageBuffer MockGenerator::generate(const GenerationRequest& request) const
{
    {
        std::lock_guard lock(mu_);
        log_.push_back({request.prompt, request.reference ? image_hash(*request.reference) : std::string(),
                        request.mask.popcount()});
    }
    const std::string p = normalize_phrase(request.prompt);
    for (const auto& term : scenario_->refused_prompt_terms)
        if (!term.empty() && p.find(term) != std::string::npos)
            fail(Errc::SafetyRejection, "generation refused for prompt containing '" + term + "'");
    return checkerboard(request.image.width(), request.image.height(), request.prompt);
}

std::vector<RecordedGeneration> MockGenerator::requests() const
{
    std::lock_guard lock(mu_);
    return log_;
}

MockBackends make_mock_backends(std::shared_ptr<const MockScenario> scenario)
{
    MockBackends m;
    m.chat = std::make_shared<MockChat>(scenario);
    m.generator = std::make_shared<MockGenerator>(scenario);
    m.backends.chat = m.chat;
    m.backends.detector = std::make_shared<MockDetector>(scenario);
    m.backends.grounder = std::make_shared<MockGrounder>(scenario);
    m.backends.segmenter = std::make_shared<MockSegmenter>(scenario);
    m.backends.pose = std::make_shared<MockPose>(scenario);
    m.backends.generator = m.generator;
    return m;
}

} // namespace shroud
