#pragma once

// JSON encodings shared by the backend contracts, mock scenarios, the
// service API, and the CLI. Field layouts are documented in docs/wire.md.

#include "shroud/backends.hpp"
#include "shroud/image.hpp"

#include <json.hpp>

namespace shroud::wire {

// [x, y, w, h]
nlohmann::json box_to_json(const BoundingBox& box);
BoundingBox box_from_json(const nlohmann::json& j);

// {"points": [[x, y], ...], "holes": [[[x, y], ...], ...]}
nlohmann::json contour_to_json(const Contour& c);
Contour contour_from_json(const nlohmann::json& j);

// Flat form used by the service: {"points": [x0, y0, x1, y1, ...], "holes": [[...], ...]}
nlohmann::json contour_to_flat_json(const Contour& c);
Contour contour_from_flat_json(const nlohmann::json& j);

// [[x, y, visible], ...] in COCO order, exactly 17 entries.
nlohmann::json keypoints_to_json(const PoseKeypoints& k);
PoseKeypoints keypoints_from_json(const nlohmann::json& j);

nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j);

// Image payloads are base64 PNG.
std::string image_to_base64_png(const ImageBuffer& img);
ImageBuffer image_from_base64(std::string_view text);
std::string mask_to_base64_png(const RegionMask& mask);
RegionMask mask_from_base64_png(std::string_view text);

} // namespace shroud::wire
