#include "shroud/obfuscation.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/hash.hpp"
#include "shroud/kernels.hpp"
#include "shroud/wire.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <set>

namespace shroud {

using nlohmann::json;

static_assert(std::variant_size_v<TechniqueParams> == kAllTechniques.size());

namespace {

[[noreturn]] void bad(const std::string& what) { fail(Errc::InvalidParameter, what); }

void require_nonempty(const RegionMask& mask)
{
    if (mask.empty()) fail(Errc::EmptyMask, "selection is empty");
}

void check_keys(const json& j, const std::set<std::string>& allowed, Technique t)
{
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) bad("unknown parameter \"" + k + "\" for " + std::string(technique_name(t)));
}

double number(const json& j, const char* key)
{
    if (!j.at(key).is_number()) bad(std::string(key) + " must be a number");
    return j.at(key).get<double>();
}

std::string text(const json& j, const char* key)
{
    if (!j.at(key).is_string()) bad(std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
}

std::optional<ImageBuffer> reference(const json& j)
{
    if (!j.contains("reference") || j.at("reference").is_null()) return std::nullopt;
    if (!j.at("reference").is_string()) bad("reference must be base64 image data");
    try {
        return load_image(base64_decode(j.at("reference").get<std::string>()));
    } catch (const Error& e) {
        bad("reference image: " + e.detail());
    }
}

std::string hex_color(Rgba c)
{
    char buf[10];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x%02x", c.r, c.g, c.b, c.a);
    return buf;
}

ImageBuffer generative_fill(const ImageBuffer& img, const RegionMask& mask, std::string_view prompt,
                            const ImageBuffer* ref, const Backends& backends)
{
    const RegionMask grown = dilate_mask(mask, kGenerativeDilation);
    const ImageBuffer generated = generate_fill(backends, img, grown, prompt, ref);
    return composite(img, generated, grown);
}

} // namespace

TechniqueParams default_params(Technique t)
{
    switch (t) {
    case Technique::GenerativeReplacement: return GenerativeParams{};
    case Technique::Removal: return RemovalParams{};
    case Technique::DotRepresentation: return DotParams{};
    case Technique::AvatarReplacement: return AvatarParams{};
    case Technique::BarReplacement: return BarParams{};
    case Technique::Silhouette: return SilhouetteParams{};
    case Technique::Masking: return MaskFillParams{};
    case Technique::Pixelating: return PixelateParams{};
    case Technique::Blurring: return BlurParams{};
    }
    return BlurParams{};
}

Technique technique_of(const TechniqueParams& p) { return kAllTechniques[p.index()]; }

Rgba parse_color(const json& j)
{
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if ((s.size() != 7 && s.size() != 9) || s[0] != '#' ||
            s.find_first_not_of("0123456789abcdefABCDEF", 1) != std::string::npos)
            bad("color must be #rrggbb or #rrggbbaa");
        auto byte = [&](size_t i) { return uint8_t(std::stoul(s.substr(i, 2), nullptr, 16)); };
        return {byte(1), byte(3), byte(5), s.size() == 9 ? byte(7) : uint8_t(255)};
    }
    if (j.is_array() && (j.size() == 3 || j.size() == 4)) {
        uint8_t v[4] = {0, 0, 0, 255};
        for (size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number_integer() || j[i].get<int64_t>() < 0 || j[i].get<int64_t>() > 255)
                bad("color channels must be integers in 0..255");
            v[i] = uint8_t(j[i].get<int64_t>());
        }
        return {v[0], v[1], v[2], v[3]};
    }
    bad("color must be #rrggbb, #rrggbbaa, or [r, g, b(, a)]");
}

TechniqueParams params_from_json(Technique t, const json& j)
{
    if (j.is_null()) return default_params(t);
    if (!j.is_object()) bad("params must be an object");
    TechniqueParams out = default_params(t);
    switch (t) {
    case Technique::Blurring: {
        check_keys(j, {"sigma"}, t);
        auto& p = std::get<BlurParams>(out);
        if (j.contains("sigma")) p.sigma = number(j, "sigma");
        break;
    }
    case Technique::Pixelating: {
        check_keys(j, {"block"}, t);
        auto& p = std::get<PixelateParams>(out);
        if (j.contains("block")) {
            const double b = number(j, "block");
            if (b != std::floor(b) || b < 1 || b > 4096) bad("block must be an integer in 1..4096");
            p.block = uint32_t(b);
        }
        break;
    }
    case Technique::Masking: {
        check_keys(j, {"color"}, t);
        if (j.contains("color")) std::get<MaskFillParams>(out).color = parse_color(j.at("color"));
        break;
    }
    case Technique::Silhouette: {
        check_keys(j, {"color"}, t);
        if (j.contains("color")) std::get<SilhouetteParams>(out).color = parse_color(j.at("color"));
        break;
    }
    case Technique::BarReplacement: {
        check_keys(j, {"color", "height_fraction"}, t);
        auto& p = std::get<BarParams>(out);
        if (j.contains("color")) p.color = parse_color(j.at("color"));
        if (j.contains("height_fraction")) p.height_fraction = number(j, "height_fraction");
        break;
    }
    case Technique::DotRepresentation: {
        check_keys(j, {"dot_radius", "draw_skeleton_lines"}, t);
        auto& p = std::get<DotParams>(out);
        if (j.contains("dot_radius")) p.dot_radius = number(j, "dot_radius");
        if (j.contains("draw_skeleton_lines")) {
            if (!j.at("draw_skeleton_lines").is_boolean()) bad("draw_skeleton_lines must be a boolean");
            p.draw_skeleton_lines = j.at("draw_skeleton_lines").get<bool>();
        }
        break;
    }
    case Technique::Removal: check_keys(j, {}, t); break;
    case Technique::AvatarReplacement: {
        check_keys(j, {"style_prompt", "reference"}, t);
        auto& p = std::get<AvatarParams>(out);
        if (j.contains("style_prompt")) p.style_prompt = text(j, "style_prompt");
        p.reference = reference(j);
        break;
    }
    case Technique::GenerativeReplacement: {
        check_keys(j, {"prompt", "reference"}, t);
        auto& p = std::get<GenerativeParams>(out);
        if (j.contains("prompt")) p.prompt = text(j, "prompt");
        p.reference = reference(j);
        break;
    }
    }
    validate(out);
    return out;
}

void validate(const TechniqueParams& params)
{
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BlurParams>) {
                if (!(p.sigma > 0 && p.sigma <= 256)) bad("sigma must be in (0, 256]");
            } else if constexpr (std::is_same_v<T, PixelateParams>) {
                if (p.block < 1) bad("block must be at least 1");
            } else if constexpr (std::is_same_v<T, BarParams>) {
                if (!(p.height_fraction > 0 && p.height_fraction <= 1)) bad("height_fraction must be in (0, 1]");
            } else if constexpr (std::is_same_v<T, DotParams>) {
                if (!(p.dot_radius > 0 && p.dot_radius <= 256)) bad("dot_radius must be in (0, 256]");
            } else if constexpr (std::is_same_v<T, AvatarParams>) {
                if (p.style_prompt.find_first_not_of(" \t\r\n") == std::string::npos)
                    fail(Errc::EmptyPrompt, "avatar style prompt is empty");
            }
        },
        params);
}

nlohmann::ordered_json params_to_json(const TechniqueParams& params)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BlurParams>) {
                j["sigma"] = p.sigma;
            } else if constexpr (std::is_same_v<T, PixelateParams>) {
                j["block"] = p.block;
            } else if constexpr (std::is_same_v<T, MaskFillParams> || std::is_same_v<T, SilhouetteParams>) {
                j["color"] = hex_color(p.color);
            } else if constexpr (std::is_same_v<T, BarParams>) {
                j["color"] = hex_color(p.color);
                j["height_fraction"] = p.height_fraction;
            } else if constexpr (std::is_same_v<T, DotParams>) {
                j["dot_radius"] = p.dot_radius;
                j["draw_skeleton_lines"] = p.draw_skeleton_lines;
            } else if constexpr (std::is_same_v<T, RemovalParams>) {
                j["prompt"] = kRemovalPrompt;
            } else if constexpr (std::is_same_v<T, AvatarParams>) {
                j["style_prompt"] = p.style_prompt;
                j["reference_hash"] = p.reference ? json(image_hash(*p.reference)) : json(nullptr);
            } else if constexpr (std::is_same_v<T, GenerativeParams>) {
                j["prompt"] = p.prompt;
                j["reference_hash"] = p.reference ? json(image_hash(*p.reference)) : json(nullptr);
            }
        },
        params);
    return j;
}

std::vector<int32_t> gaussian_weights(double sigma)
{
    if (!(sigma > 0)) bad("sigma must be positive");
    const int64_t radius = int64_t(std::ceil(3 * sigma));
    const size_t taps = size_t(2 * radius + 1);
    std::vector<double> g(taps);
    for (int64_t k = -radius; k <= radius; ++k) g[size_t(k + radius)] = std::exp(-double(k * k) / (2 * sigma * sigma));
    const double total = std::accumulate(g.begin(), g.end(), 0.0);

    // Largest-remainder rounding keeps the sum exact.
    constexpr int32_t one = 1 << kernels::kWeightBits;
    std::vector<int32_t> w(taps);
    std::vector<std::pair<double, size_t>> rem(taps);
    int32_t sum = 0;
    for (size_t i = 0; i < taps; ++i) {
        const double exact = g[i] / total * one;
        w[i] = int32_t(std::floor(exact));
        rem[i] = {exact - w[i], i};
        sum += w[i];
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t i = 0; sum < one; ++i, ++sum) ++w[rem[i].second];
    return w;
}

namespace {

// Blurs rows [y0, y1) of the output; the vertical pass reads clamped rows of the whole image.
void blur_rows(const ImageBuffer& img, ImageBuffer& out, double sigma, uint32_t y0, uint32_t y1)
{
    const auto w = gaussian_weights(sigma);
    const uint32_t radius = uint32_t(w.size() / 2);
    const uint32_t width = img.width(), height = img.height();
    const auto& k = kernels::active();

    const uint32_t src0 = y0 > radius ? y0 - radius : 0;
    const uint32_t src1 = std::min<uint64_t>(height, uint64_t(y1) + radius);
    const size_t stride = size_t(width) * 4;
    std::vector<uint16_t> inter(size_t(src1 - src0) * stride);
    for (uint32_t y = src0; y < src1; ++y)
        k.blur_row(img.row(y).data(), inter.data() + size_t(y - src0) * stride, width, w.data(), radius);

    std::vector<const uint16_t*> rows(w.size());
    for (uint32_t y = y0; y < y1; ++y) {
        for (size_t t = 0; t < w.size(); ++t) {
            const int64_t sy = std::clamp<int64_t>(int64_t(y) + int64_t(t) - radius, 0, int64_t(height) - 1);
            rows[t] = inter.data() + size_t(sy - src0) * stride;
        }
        k.blur_column(rows.data(), w.data(), uint32_t(w.size()), out.data().data() + size_t(y) * stride, stride);
    }
}

} // namespace

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma)
{
    ImageBuffer out = img;
    blur_rows(img, out, sigma, 0, img.height());
    return out;
}

ImageBuffer apply_blur(const ImageBuffer& img, const RegionMask& mask, double sigma)
{
    require_same_size(img, mask);
    if (!(sigma > 0)) bad("sigma must be positive");
    if (mask.empty()) return img;
    // Only rows covered by the selection need the blurred values.
    const BoundingBox box = bbox_of_mask(mask);
    ImageBuffer blurred = img;
    blur_rows(img, blurred, sigma, uint32_t(box.y), uint32_t(box.bottom()));
    return composite(img, blurred, mask);
}

ImageBuffer apply_pixelate(const ImageBuffer& img, const RegionMask& mask, uint32_t block)
{
    require_same_size(img, mask);
    if (block < 1) bad("block must be at least 1");
    require_nonempty(mask);
    const BoundingBox box = bbox_of_mask(mask);
    ImageBuffer out = img;
    for (int64_t cy = box.y; cy < box.bottom(); cy += block)
        for (int64_t cx = box.x; cx < box.right(); cx += block) {
            const int64_t ex = std::min<int64_t>(cx + block, box.right()), ey = std::min<int64_t>(cy + block, box.bottom());
            uint64_t sum[4] = {0, 0, 0, 0};
            uint64_t n = 0;
            for (int64_t y = cy; y < ey; ++y)
                for (int64_t x = cx; x < ex; ++x)
                    if (mask.at(uint32_t(x), uint32_t(y))) {
                        const Rgba p = img.at(uint32_t(x), uint32_t(y));
                        sum[0] += p.r, sum[1] += p.g, sum[2] += p.b, sum[3] += p.a;
                        ++n;
                    }
            if (n == 0) continue;
            const Rgba mean{uint8_t((sum[0] * 2 + n) / (2 * n)), uint8_t((sum[1] * 2 + n) / (2 * n)),
                            uint8_t((sum[2] * 2 + n) / (2 * n)), uint8_t((sum[3] * 2 + n) / (2 * n))};
            for (int64_t y = cy; y < ey; ++y)
                for (int64_t x = cx; x < ex; ++x)
                    if (mask.at(uint32_t(x), uint32_t(y))) out.set(uint32_t(x), uint32_t(y), mean);
        }
    return out;
}

ImageBuffer apply_mask_fill(const ImageBuffer& img, const RegionMask& mask, Rgba color)
{
    require_same_size(img, mask);
    require_nonempty(mask);
    ImageBuffer out = img;
    fill_rect(out, bbox_of_mask(mask), color);
    return out;
}

ImageBuffer apply_silhouette(const ImageBuffer& img, const RegionMask& mask, Rgba color)
{
    require_same_size(img, mask);
    require_nonempty(mask);
    ImageBuffer out = img;
    for (uint32_t y = 0; y < img.height(); ++y)
        for (uint32_t x = 0; x < img.width(); ++x)
            if (mask.at(x, y)) out.set(x, y, color);
    return out;
}

BoundingBox bar_rect(const BoundingBox& box, double height_fraction)
{
    const int32_t bar_h = std::clamp<int32_t>(int32_t(std::lround(height_fraction * box.h)), 1, box.h);
    const int32_t offset = int32_t(std::lround(box.h / 6.0 - bar_h / 2.0));
    const int32_t top = std::clamp(box.y + offset, box.y, box.bottom() - bar_h);
    return {box.x, top, box.w, bar_h};
}

ImageBuffer apply_removal(const ImageBuffer& img, const RegionMask& mask, const Backends& backends)
{
    require_same_size(img, mask);
    require_nonempty(mask);
    return generative_fill(img, mask, kRemovalPrompt, nullptr, backends);
}

ImageBuffer apply_bar(const ImageBuffer& img, const RegionMask& mask, const BarParams& params, const Backends& backends)
{
    validate(params);
    ImageBuffer out = apply_removal(img, mask, backends);
    fill_rect(out, bar_rect(bbox_of_mask(mask), params.height_fraction), params.color);
    return out;
}

ImageBuffer apply_point_light(const ImageBuffer& img, const RegionMask& mask, const PoseKeypoints& keypoints,
                              const DotParams& params, const Backends& backends)
{
    validate(params);
    PoseKeypoints pose = keypoints;
    pose.clip_to(img.width(), img.height());
    if (pose.visible_count() < size_t(kMinPoseKeypoints))
        fail(Errc::InsufficientKeypoints, std::to_string(pose.visible_count()) + " visible keypoints, need " +
                                              std::to_string(kMinPoseKeypoints));
    ImageBuffer out = apply_removal(img, mask, backends);
    if (params.draw_skeleton_lines)
        for (const auto& [a, b] : kSkeletonPairs) {
            const Keypoint& p = pose.points[size_t(a)];
            const Keypoint& q = pose.points[size_t(b)];
            if (p.visible && q.visible)
                draw_line(out, int32_t(std::lround(p.x)), int32_t(std::lround(p.y)), int32_t(std::lround(q.x)),
                          int32_t(std::lround(q.y)), kWhite);
        }
    for (const auto& k : pose.points)
        if (k.visible) fill_disk(out, k.x, k.y, params.dot_radius, kWhite);
    return out;
}

ImageBuffer apply_avatar(const ImageBuffer& img, const RegionMask& mask, const AvatarParams& params,
                         const Backends& backends)
{
    require_same_size(img, mask);
    require_nonempty(mask);
    validate(params);
    return generative_fill(img, mask, params.style_prompt, params.reference ? &*params.reference : nullptr, backends);
}

ImageBuffer apply_generative_replacement(const ImageBuffer& img, const RegionMask& mask, const GenerativeParams& params,
                                         const Backends& backends)
{
    require_same_size(img, mask);
    if (params.prompt.find_first_not_of(" \t\r\n") == std::string::npos)
        fail(Errc::EmptyPrompt, "generative replacement needs a prompt");
    require_nonempty(mask);
    return generative_fill(img, mask, params.prompt, params.reference ? &*params.reference : nullptr, backends);
}

RegionMask selection_mask(const Selection& sel, uint32_t width, uint32_t height)
{
    if (const auto* c = std::get_if<Contour>(&sel)) return rasterize_contour(*c, width, height);
    const auto& m = std::get<RegionMask>(sel);
    if (m.width() != width || m.height() != height)
        fail(Errc::DimensionMismatch, "mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                                          ", image is " + std::to_string(width) + "x" + std::to_string(height));
    return m;
}

ImageBuffer apply(Technique technique, const ImageBuffer& img, const Selection& selection, const TechniqueParams& params,
                  const Backends& backends)
{
    if (technique_of(params) != technique)
        bad("parameters do not belong to " + std::string(technique_name(technique)));
    const RegionMask mask = selection_mask(selection, img.width(), img.height());
    switch (technique) {
    case Technique::Blurring: return apply_blur(img, mask, std::get<BlurParams>(params).sigma);
    case Technique::Pixelating: return apply_pixelate(img, mask, std::get<PixelateParams>(params).block);
    case Technique::Masking: return apply_mask_fill(img, mask, std::get<MaskFillParams>(params).color);
    case Technique::Silhouette: return apply_silhouette(img, mask, std::get<SilhouetteParams>(params).color);
    case Technique::BarReplacement: return apply_bar(img, mask, std::get<BarParams>(params), backends);
    case Technique::Removal: return apply_removal(img, mask, backends);
    case Technique::AvatarReplacement: return apply_avatar(img, mask, std::get<AvatarParams>(params), backends);
    case Technique::GenerativeReplacement:
        return apply_generative_replacement(img, mask, std::get<GenerativeParams>(params), backends);
    case Technique::DotRepresentation: {
        require_nonempty(mask);
        const PoseKeypoints pose = estimate_pose(backends, img, bbox_of_mask(mask));
        return apply_point_light(img, mask, pose, std::get<DotParams>(params), backends);
    }
    }
    bad("unknown technique");
}

} // namespace shroud
