#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shroud {

struct Rgba {
    uint8_t r = 0, g = 0, b = 0, a = 255;
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

inline constexpr Rgba kGreen{0, 255, 0, 255};
inline constexpr Rgba kRed{255, 0, 0, 255};
inline constexpr Rgba kWhite{255, 255, 255, 255};
inline constexpr Rgba kBlack{0, 0, 0, 255};

// Largest accepted edge length in pixels.
inline constexpr uint32_t kMaxImageSide = 16384;

// 8-bit RGBA, row-major, origin top-left.
class ImageBuffer {
public:
    ImageBuffer(uint32_t width, uint32_t height, Rgba fill = kBlack);
    ImageBuffer(uint32_t width, uint32_t height, std::vector<uint8_t> rgba);

    uint32_t width() const noexcept { return width_; }
    uint32_t height() const noexcept { return height_; }
    size_t pixel_count() const noexcept { return size_t(width_) * height_; }

    std::span<const uint8_t> data() const noexcept { return data_; }
    std::span<uint8_t> data() noexcept { return data_; }
    std::span<const uint8_t> row(uint32_t y) const noexcept { return {data_.data() + size_t(y) * width_ * 4, size_t(width_) * 4}; }

    Rgba at(uint32_t x, uint32_t y) const noexcept
    {
        const uint8_t* p = &data_[(size_t(y) * width_ + x) * 4];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(uint32_t x, uint32_t y, Rgba c) noexcept
    {
        uint8_t* p = &data_[(size_t(y) * width_ + x) * 4];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }
    bool contains(int64_t x, int64_t y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    uint32_t width_;
    uint32_t height_;
    std::vector<uint8_t> data_;
};

// One byte per pixel, 0 or 1.
class RegionMask {
public:
    RegionMask(uint32_t width, uint32_t height, bool fill = false);

    uint32_t width() const noexcept { return width_; }
    uint32_t height() const noexcept { return height_; }

    bool at(uint32_t x, uint32_t y) const noexcept { return bits_[size_t(y) * width_ + x] != 0; }
    void set(uint32_t x, uint32_t y, bool v = true) noexcept { bits_[size_t(y) * width_ + x] = v ? 1 : 0; }

    std::span<const uint8_t> bits() const noexcept { return bits_; }
    std::span<uint8_t> bits() noexcept { return bits_; }

    size_t popcount() const noexcept;
    bool empty() const noexcept { return popcount() == 0; }
    bool subset_of(const RegionMask& other) const;
    RegionMask united(const RegionMask& other) const;

    friend bool operator==(const RegionMask&, const RegionMask&) = default;

private:
    uint32_t width_;
    uint32_t height_;
    std::vector<uint8_t> bits_;
};

struct Point {
    double x = 0;
    double y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

// Closed polygon with optional holes. Each ring has at least three points and
// no two non-adjacent edges cross.
class Contour {
public:
    explicit Contour(std::vector<Point> outer, std::vector<std::vector<Point>> holes = {});

    const std::vector<Point>& outer() const noexcept { return outer_; }
    const std::vector<std::vector<Point>>& holes() const noexcept { return holes_; }

    friend bool operator==(const Contour&, const Contour&) = default;

private:
    std::vector<Point> outer_;
    std::vector<std::vector<Point>> holes_;
};

struct BoundingBox {
    int32_t x = 0;
    int32_t y = 0;
    int32_t w = 1;
    int32_t h = 1;

    int32_t right() const noexcept { return x + w; }
    int32_t bottom() const noexcept { return y + h; }
    bool within(uint32_t width, uint32_t height) const noexcept
    {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && int64_t(x) + w <= width && int64_t(y) + h <= height;
    }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Intersect with the canvas; throws DegenerateResult when nothing remains.
BoundingBox clamp_box(const BoundingBox& box, uint32_t width, uint32_t height);

void require_same_size(const ImageBuffer& img, const RegionMask& mask);
void require_same_size(const ImageBuffer& a, const ImageBuffer& b);

// Even-odd fill over pixel centers; holes fall out of the rule naturally.
RegionMask rasterize_contour(const Contour& contour, uint32_t width, uint32_t height);

BoundingBox bbox_of_mask(const RegionMask& mask);

// Chebyshev (square) structuring element.
RegionMask dilate_mask(const RegionMask& mask, uint32_t radius);
// Off-canvas pixels count as outside the mask.
RegionMask erode_mask(const RegionMask& mask, uint32_t radius);

ImageBuffer composite(const ImageBuffer& base, const ImageBuffer& overlay, const RegionMask& mask);

struct OverlayStyle {
    uint32_t thickness = 3;
    Rgba color = kGreen;
};

// Draws the inner boundary band of every mask component onto a copy.
ImageBuffer render_concern_overlay(const ImageBuffer& img, const RegionMask& mask, OverlayStyle style = {});

struct GreenThresholds {
    int min_green = 200;
    int min_margin_red = 80;
    int min_margin_blue = 80;
};

RegionMask mask_from_green_annotation(const ImageBuffer& annotated, const ImageBuffer& original,
                                      GreenThresholds thresholds = {});

// Drawing helpers shared by the pre-scan and the point-light renderer.
void fill_rect(ImageBuffer& img, const BoundingBox& box, Rgba color);
void stroke_rect(ImageBuffer& img, const BoundingBox& box, uint32_t thickness, Rgba color);
void fill_disk(ImageBuffer& img, double cx, double cy, double radius, Rgba color);
void draw_line(ImageBuffer& img, int32_t x0, int32_t y0, int32_t x1, int32_t y1, Rgba color);

} // namespace shroud
