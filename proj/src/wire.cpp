#include "shroud/wire.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/hash.hpp"

namespace shroud::wire {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(Errc::BackendError, "malformed payload: " + what); }

double number(const json& j, const char* what)
{
    if (!j.is_number()) bad(std::string(what) + " is not a number");
    return j.get<double>();
}

std::vector<Point> ring_from_pairs(const json& j)
{
    if (!j.is_array()) bad("ring is not an array");
    std::vector<Point> ring;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) bad("point is not [x, y]");
        ring.push_back({number(p[0], "x"), number(p[1], "y")});
    }
    return ring;
}

std::vector<Point> ring_from_flat(const json& j)
{
    if (!j.is_array() || j.size() % 2 != 0) bad("flat ring must hold an even number of coordinates");
    std::vector<Point> ring;
    for (size_t i = 0; i < j.size(); i += 2) ring.push_back({number(j[i], "x"), number(j[i + 1], "y")});
    return ring;
}

} // namespace

json box_to_json(const BoundingBox& box) { return json::array({box.x, box.y, box.w, box.h}); }

BoundingBox box_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 4) bad("box must be [x, y, w, h]");
    for (const auto& v : j)
        if (!v.is_number()) bad("box entries must be numbers");
    return {int32_t(std::lround(j[0].get<double>())), int32_t(std::lround(j[1].get<double>())),
            int32_t(std::lround(j[2].get<double>())), int32_t(std::lround(j[3].get<double>()))};
}

json contour_to_json(const Contour& c)
{
    auto ring = [](const std::vector<Point>& r) {
        json a = json::array();
        for (const auto& p : r) a.push_back({p.x, p.y});
        return a;
    };
    json holes = json::array();
    for (const auto& h : c.holes()) holes.push_back(ring(h));
    return {{"points", ring(c.outer())}, {"holes", holes}};
}

Contour contour_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("points")) bad("contour needs \"points\"");
    std::vector<std::vector<Point>> holes;
    if (j.contains("holes"))
        for (const auto& h : j.at("holes")) holes.push_back(ring_from_pairs(h));
    return Contour(ring_from_pairs(j.at("points")), std::move(holes));
}

json contour_to_flat_json(const Contour& c)
{
    auto ring = [](const std::vector<Point>& r) {
        json a = json::array();
        for (const auto& p : r) {
            a.push_back(p.x);
            a.push_back(p.y);
        }
        return a;
    };
    json holes = json::array();
    for (const auto& h : c.holes()) holes.push_back(ring(h));
    return {{"points", ring(c.outer())}, {"holes", holes}};
}

Contour contour_from_flat_json(const json& j)
{
    if (!j.is_object() || !j.contains("points")) bad("contour needs \"points\"");
    std::vector<std::vector<Point>> holes;
    if (j.contains("holes"))
        for (const auto& h : j.at("holes")) holes.push_back(ring_from_flat(h));
    return Contour(ring_from_flat(j.at("points")), std::move(holes));
}

json keypoints_to_json(const PoseKeypoints& k)
{
    json a = json::array();
    for (const auto& p : k.points) a.push_back({p.x, p.y, p.visible});
    return a;
}

PoseKeypoints keypoints_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 17) bad("keypoints must be 17 [x, y, visible] entries");
    PoseKeypoints k;
    for (size_t i = 0; i < 17; ++i) {
        const json& p = j[i];
        if (!p.is_array() || p.size() != 3) bad("keypoint must be [x, y, visible]");
        k.points[i] = {number(p[0], "x"), number(p[1], "y"), p[2].is_boolean() ? p[2].get<bool>() : number(p[2], "visible") > 0};
    }
    return k;
}

json detection_to_json(const Detection& d)
{
    return {{"label", d.label}, {"box", box_to_json(d.box)}, {"confidence", d.confidence}};
}

Detection detection_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string() || !j.contains("box"))
        bad("detection needs label and box");
    Detection d{j["label"].get<std::string>(), box_from_json(j["box"]), 1.0};
    if (j.contains("confidence")) d.confidence = number(j["confidence"], "confidence");
    return d;
}

std::string image_to_base64_png(const ImageBuffer& img) { return base64_encode(save_image(img, ImageFormat::Png)); }

ImageBuffer image_from_base64(std::string_view text) { return load_image(base64_decode(text)); }

std::string mask_to_base64_png(const RegionMask& mask) { return base64_encode(encode_mask_png(mask)); }

RegionMask mask_from_base64_png(std::string_view text) { return decode_mask_png(base64_decode(text)); }

} // namespace shroud::wire
