#pragma once

#include "shroud/backends.hpp"
#include "shroud/image.hpp"
#include "shroud/risk_model.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shroud {

struct UserContext {
    std::optional<std::string> sharing_intent;
    std::optional<std::string> privacy_concern;
    std::optional<RegionMask> concern_mask;

    bool has_concern_region() const { return concern_mask && !concern_mask->empty(); }
};

struct PreScan {
    std::vector<Detection> detections;
    ImageBuffer annotated_image;
    std::string object_dictionary;
};

enum class ResponseSchema { RiskReportV1, RecommendationSetV1 };

std::string_view schema_name(ResponseSchema s);

struct PromptImage {
    std::string role; // "original", "prescan", "concern_overlay"
    ImageBuffer image;
};

struct PromptBundle {
    std::string text;
    std::vector<PromptImage> images;
    ResponseSchema expected = ResponseSchema::RiskReportV1;
};

// Content address of a bundle: text, schema, and every image (role + pixels).
std::string bundle_hash(const PromptBundle& bundle);
// Pixel hash of the bundle's "original" image, or empty.
std::string bundle_original_hash(const PromptBundle& bundle);

inline constexpr std::string_view kNotProvided = "not provided";
inline constexpr uint32_t kPrescanStroke = 2;
inline constexpr int kLabelHeight = 12;

// Raw template text by asset name (e.g. "identification_v1").
std::string_view prompt_asset(std::string_view name);

// Replaces {{NAME}} placeholders; "\{{" produces a literal "{{". Unknown or
// unfilled placeholders throw InvalidParameter.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Renders `text` in the embedded 7x12 font with its top-left at (x, y).
void draw_text(ImageBuffer& img, int32_t x, int32_t y, std::string_view text, Rgba color);
int32_t text_width(std::string_view text);

PreScan build_prescan(const ImageBuffer& img, const std::vector<Detection>& detections);
PromptBundle build_identification_prompt(const UserContext& ctx, const PreScan& scan, const ImageBuffer& img);
PromptBundle build_recommendation_prompt(const UserContext& ctx, const RiskReport& report, const ImageBuffer& img);

} // namespace shroud
