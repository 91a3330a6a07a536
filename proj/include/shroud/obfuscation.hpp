#pragma once

// The nine obfuscation techniques. Classical techniques are pure functions of
// their inputs; generative ones call the generator backend and composite its
// output through the selection grown by kGenerativeDilation pixels.

#include "shroud/backends.hpp"
#include "shroud/image.hpp"
#include "shroud/risk_model.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>

namespace shroud {

inline constexpr uint32_t kGenerativeDilation = 2;
inline constexpr int kMinPoseKeypoints = 5;
inline constexpr std::string_view kRemovalPrompt = "background continuation";

struct BlurParams {
    double sigma = 8;
};
struct PixelateParams {
    uint32_t block = 12;
};
struct MaskFillParams {
    Rgba color = kBlack;
};
struct SilhouetteParams {
    Rgba color{40, 40, 40, 255};
};
struct BarParams {
    Rgba color = kBlack;
    double height_fraction = 0.3;
};
struct DotParams {
    double dot_radius = 4;
    bool draw_skeleton_lines = true;
};
struct RemovalParams {};
struct AvatarParams {
    std::string style_prompt = "neutral cartoon avatar face, matching lighting";
    std::optional<ImageBuffer> reference;
};
struct GenerativeParams {
    std::string prompt;
    std::optional<ImageBuffer> reference;
};

using TechniqueParams = std::variant<GenerativeParams, RemovalParams, DotParams, AvatarParams, BarParams,
                                     SilhouetteParams, MaskFillParams, PixelateParams, BlurParams>;

TechniqueParams default_params(Technique t);
Technique technique_of(const TechniqueParams& p);

// Throws InvalidParameter for out-of-range values or unknown keys. Colors are
// "#rrggbb", "#rrggbbaa", or [r, g, b(, a)]. References are base64 PNG/JPEG.
TechniqueParams params_from_json(Technique t, const nlohmann::json& j);
// References are recorded by pixel hash only.
nlohmann::ordered_json params_to_json(const TechniqueParams& p);
void validate(const TechniqueParams& p);

Rgba parse_color(const nlohmann::json& j);

// Gaussian taps in Q14, radius ceil(3 sigma), summing to exactly 1 << 14.
std::vector<int32_t> gaussian_weights(double sigma);
// Whole-image separable blur, edge-clamped.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

ImageBuffer apply_blur(const ImageBuffer& img, const RegionMask& mask, double sigma);
ImageBuffer apply_pixelate(const ImageBuffer& img, const RegionMask& mask, uint32_t block);
ImageBuffer apply_mask_fill(const ImageBuffer& img, const RegionMask& mask, Rgba color);
ImageBuffer apply_silhouette(const ImageBuffer& img, const RegionMask& mask, Rgba color);

// Bar rectangle for a selection bounding box: full width, height_fraction of
// the box height, centred on the box's upper third and kept inside the box.
BoundingBox bar_rect(const BoundingBox& box, double height_fraction = 0.3);

ImageBuffer apply_removal(const ImageBuffer& img, const RegionMask& mask, const Backends& backends);
ImageBuffer apply_bar(const ImageBuffer& img, const RegionMask& mask, const BarParams& params, const Backends& backends);
ImageBuffer apply_point_light(const ImageBuffer& img, const RegionMask& mask, const PoseKeypoints& keypoints,
                              const DotParams& params, const Backends& backends);
ImageBuffer apply_avatar(const ImageBuffer& img, const RegionMask& mask, const AvatarParams& params,
                         const Backends& backends);
ImageBuffer apply_generative_replacement(const ImageBuffer& img, const RegionMask& mask, const GenerativeParams& params,
                                         const Backends& backends);

using Selection = std::variant<Contour, RegionMask>;

RegionMask selection_mask(const Selection& sel, uint32_t width, uint32_t height);

// Dispatches on the technique; params must hold the matching alternative.
// DotRepresentation estimates the pose inside the selection's bounding box.
ImageBuffer apply(Technique technique, const ImageBuffer& img, const Selection& selection,
                  const TechniqueParams& params, const Backends& backends);

} // namespace shroud
