#include "shroud/prompt.hpp"

#include "shroud/error.hpp"
#include "shroud/hash.hpp"

#include <cmath>

namespace shroud {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kPromptAssets[];
extern const std::size_t kPromptAssetCount;
} // namespace detail

namespace {

#include "font_data.inc"

// Runtime inputs are spliced into the verbatim templates right before these lines.
constexpr std::string_view kIdentificationAnchor = "Remember to prioritize user-provided privacy concerns";
constexpr std::string_view kRecommendationAnchor = "[Tasks]:";

std::string sanitize_user_text(const std::optional<std::string>& text)
{
    if (!text) return std::string(kNotProvided);
    std::string s = *text;
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string(kNotProvided);
    s = s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
    // Keep user text from ever looking like a placeholder.
    for (size_t pos = 0; (pos = s.find("{{", pos)) != std::string::npos;) s.replace(pos, 2, "{ {");
    for (size_t pos = 0; (pos = s.find("}}", pos)) != std::string::npos;) s.replace(pos, 2, "} }");
    return s;
}

std::string splice(std::string_view tmpl, std::string_view anchor, std::string_view block)
{
    const auto at = tmpl.find(anchor);
    if (at == std::string_view::npos) fail(Errc::InvalidParameter, "template anchor missing: " + std::string(anchor));
    std::string out;
    out.reserve(tmpl.size() + block.size());
    out.append(tmpl.substr(0, at));
    out.append(block);
    out.append(tmpl.substr(at));
    return out;
}

std::string image_list(const PromptBundle& bundle)
{
    std::string out;
    for (size_t i = 0; i < bundle.images.size(); ++i) {
        const std::string& role = bundle.images[i].role;
        std::string what;
        if (role == "original")
            what = "[Original Image] the image the user wants to share";
        else if (role == "prescan")
            what = "[Pre-Scan Data] visually annotated photo with red boxes marking all objects";
        else
            what = "[User Concern Region] annotated image with concerns marked in green by the user";
        out += "Image " + std::to_string(i + 1) + ": " + what + (i + 1 < bundle.images.size() ? "\n" : "");
    }
    return out;
}

std::string concern_region_text(const PromptBundle& bundle)
{
    for (size_t i = 0; i < bundle.images.size(); ++i)
        if (bundle.images[i].role == "concern_overlay")
            return "attached as Image " + std::to_string(i + 1) + "; the elements in the green border were marked by the user";
    return std::string(kNotProvided);
}

void attach_concern(PromptBundle& bundle, const UserContext& ctx, const ImageBuffer& img)
{
    if (!ctx.has_concern_region()) return;
    bundle.images.push_back({"concern_overlay", render_concern_overlay(img, *ctx.concern_mask)});
}

} // namespace

std::string_view schema_name(ResponseSchema s)
{
    return s == ResponseSchema::RiskReportV1 ? "RiskReportV1" : "RecommendationSetV1";
}

std::string bundle_hash(const PromptBundle& bundle)
{
    std::string material = std::string(schema_name(bundle.expected)) + "\n" + sha256_hex(bundle.text) + "\n";
    for (const auto& im : bundle.images) material += im.role + ":" + image_hash(im.image) + "\n";
    return sha256_hex(material);
}

std::string bundle_original_hash(const PromptBundle& bundle)
{
    for (const auto& im : bundle.images)
        if (im.role == "original") return image_hash(im.image);
    return {};
}

std::string_view prompt_asset(std::string_view name)
{
    for (std::size_t i = 0; i < detail::kPromptAssetCount; ++i)
        if (detail::kPromptAssets[i].first == name) return detail::kPromptAssets[i].second;
    fail(Errc::InvalidParameter, "unknown prompt asset " + std::string(name));
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values)
{
    std::string out;
    out.reserve(tmpl.size());
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 3, "\\{{") == 0) {
            out += "{{";
            i += 3;
        } else if (tmpl.compare(i, 2, "{{") == 0) {
            const auto end = tmpl.find("}}", i + 2);
            if (end == std::string_view::npos) fail(Errc::InvalidParameter, "unterminated placeholder");
            const std::string name(tmpl.substr(i + 2, end - i - 2));
            const auto it = values.find(name);
            if (it == values.end()) fail(Errc::InvalidParameter, "unfilled placeholder " + name);
            out += it->second;
            i = end + 2;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

int32_t text_width(std::string_view text) { return int32_t(text.size()) * kGlyphWidth; }

void draw_text(ImageBuffer& img, int32_t x, int32_t y, std::string_view text, Rgba color)
{
    for (size_t n = 0; n < text.size(); ++n) {
        unsigned char c = static_cast<unsigned char>(text[n]);
        if (c < 32 || c > 126) c = '?';
        const unsigned char* rows = kGlyphRows[c - 32];
        const int32_t gx = x + int32_t(n) * kGlyphWidth;
        for (int32_t r = 0; r < kGlyphHeight; ++r)
            for (int32_t col = 0; col < kGlyphWidth; ++col)
                if (rows[r] & (1 << (kGlyphWidth - 1 - col)) && img.contains(gx + col, y + r))
                    img.set(uint32_t(gx + col), uint32_t(y + r), color);
    }
}

PreScan build_prescan(const ImageBuffer& img, const std::vector<Detection>& detections)
{
    for (const auto& d : detections)
        if (!d.box.within(img.width(), img.height()))
            fail(Errc::BoxOutOfBounds, "detection '" + d.label + "' box (" + std::to_string(d.box.x) + "," +
                                           std::to_string(d.box.y) + "," + std::to_string(d.box.w) + "," +
                                           std::to_string(d.box.h) + ") exceeds the image");

    PreScan scan{detections, img, {}};
    nlohmann::ordered_json dict = nlohmann::ordered_json::array();
    for (size_t i = 0; i < detections.size(); ++i) {
        const auto& d = detections[i];
        stroke_rect(scan.annotated_image, d.box, kPrescanStroke, kRed);
        const int32_t label_y = d.box.y >= kLabelHeight ? d.box.y - kLabelHeight : d.box.y;
        fill_rect(scan.annotated_image, {d.box.x, label_y, text_width(d.label) + 2, kLabelHeight}, kRed);
        draw_text(scan.annotated_image, d.box.x + 1, label_y, d.label, kWhite);

        nlohmann::ordered_json entry;
        entry["id"] = i + 1;
        entry["label"] = d.label;
        entry["position"] = {{"x", d.box.x}, {"y", d.box.y}};
        entry["width"] = d.box.w;
        entry["length"] = d.box.h;
        entry["confidence"] = std::round(d.confidence * 100.0) / 100.0;
        dict.push_back(std::move(entry));
    }
    scan.object_dictionary = dict.dump(2);
    return scan;
}

PromptBundle build_identification_prompt(const UserContext& ctx, const PreScan& scan, const ImageBuffer& img)
{
    require_same_size(img, scan.annotated_image);
    if (ctx.concern_mask) require_same_size(img, *ctx.concern_mask);

    PromptBundle bundle;
    bundle.expected = ResponseSchema::RiskReportV1;
    bundle.images.push_back({"original", img});
    bundle.images.push_back({"prescan", scan.annotated_image});
    attach_concern(bundle, ctx, img);

    const std::string inputs = fill_template(prompt_asset("identification_inputs_v1"),
                                             {{"SHARING_INTENT", sanitize_user_text(ctx.sharing_intent)},
                                              {"PRIVACY_CONCERN", sanitize_user_text(ctx.privacy_concern)},
                                              {"CONCERN_REGION", concern_region_text(bundle)},
                                              {"IMAGE_LIST", image_list(bundle)},
                                              {"OBJECT_DICTIONARY", scan.object_dictionary}});
    bundle.text = splice(prompt_asset("identification_v1"), kIdentificationAnchor, inputs);
    return bundle;
}

PromptBundle build_recommendation_prompt(const UserContext& ctx, const RiskReport& report, const ImageBuffer& img)
{
    if (report.empty()) fail(Errc::EmptyReport, "recommendations need at least one identified risk");
    if (ctx.concern_mask) require_same_size(img, *ctx.concern_mask);

    PromptBundle bundle;
    bundle.expected = ResponseSchema::RecommendationSetV1;
    bundle.images.push_back({"original", img});
    attach_concern(bundle, ctx, img);

    const std::string inputs = fill_template(prompt_asset("recommendation_inputs_v1"),
                                             {{"SHARING_INTENT", sanitize_user_text(ctx.sharing_intent)},
                                              {"PRIVACY_CONCERN", sanitize_user_text(ctx.privacy_concern)},
                                              {"CONCERN_REGION", concern_region_text(bundle)},
                                              {"IMAGE_LIST", image_list(bundle)},
                                              {"IDENTIFICATION_RESULT", serialize_report(report)}});
    bundle.text = splice(prompt_asset("recommendation_v1"), kRecommendationAnchor, inputs);
    return bundle;
}

} // namespace shroud
