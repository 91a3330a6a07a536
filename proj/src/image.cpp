#include "shroud/image.hpp"

#include "shroud/error.hpp"
#include "shroud/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace shroud {
namespace {

void check_dims(uint32_t width, uint32_t height)
{
    if (width < 1 || height < 1) fail(Errc::InvalidParameter, "image dimensions must be at least 1x1");
    if (width > kMaxImageSide || height > kMaxImageSide)
        fail(Errc::UnsupportedFormat, "image exceeds " + std::to_string(kMaxImageSide) + " px per side");
}

double cross(const Point& o, const Point& a, const Point& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Strict crossing of two segments; touching or collinear overlap is not counted.
bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
    const double d1 = cross(q1, q2, p1);
    const double d2 = cross(q1, q2, p2);
    const double d3 = cross(p1, p2, q1);
    const double d4 = cross(p1, p2, q2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

void validate_ring(const std::vector<Point>& ring)
{
    if (ring.size() < 3) fail(Errc::DegenerateContour, "ring has " + std::to_string(ring.size()) + " points");
    for (const Point& p : ring)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(Errc::DegenerateContour, "non-finite coordinate");
    const size_t n = ring.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]))
                fail(Errc::SelfIntersectingContour,
                     "edges " + std::to_string(i) + " and " + std::to_string(j) + " cross");
        }
    }
}

} // namespace

ImageBuffer::ImageBuffer(uint32_t width, uint32_t height, Rgba fill) : width_(width), height_(height)
{
    check_dims(width, height);
    data_.resize(pixel_count() * 4);
    for (size_t i = 0; i < pixel_count(); ++i) {
        data_[i * 4 + 0] = fill.r;
        data_[i * 4 + 1] = fill.g;
        data_[i * 4 + 2] = fill.b;
        data_[i * 4 + 3] = fill.a;
    }
}

ImageBuffer::ImageBuffer(uint32_t width, uint32_t height, std::vector<uint8_t> rgba)
    : width_(width), height_(height), data_(std::move(rgba))
{
    check_dims(width, height);
    if (data_.size() != pixel_count() * 4) fail(Errc::DimensionMismatch, "pixel data length does not match 4*w*h");
}

RegionMask::RegionMask(uint32_t width, uint32_t height, bool fill)
    : width_(width), height_(height), bits_(size_t(width) * height, fill ? 1 : 0)
{
    check_dims(width, height);
}

size_t RegionMask::popcount() const noexcept
{
    return size_t(std::count_if(bits_.begin(), bits_.end(), [](uint8_t b) { return b != 0; }));
}

bool RegionMask::subset_of(const RegionMask& other) const
{
    if (width_ != other.width_ || height_ != other.height_) fail(Errc::DimensionMismatch, "mask sizes differ");
    for (size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !other.bits_[i]) return false;
    return true;
}

RegionMask RegionMask::united(const RegionMask& other) const
{
    if (width_ != other.width_ || height_ != other.height_) fail(Errc::DimensionMismatch, "mask sizes differ");
    RegionMask out = *this;
    kernels::active().mask_or(out.bits_.data(), other.bits_.data(), bits_.size());
    return out;
}

Contour::Contour(std::vector<Point> outer, std::vector<std::vector<Point>> holes)
    : outer_(std::move(outer)), holes_(std::move(holes))
{
    validate_ring(outer_);
    for (const auto& h : holes_) validate_ring(h);
}

BoundingBox clamp_box(const BoundingBox& box, uint32_t width, uint32_t height)
{
    const int64_t x0 = std::clamp<int64_t>(box.x, 0, width);
    const int64_t y0 = std::clamp<int64_t>(box.y, 0, height);
    const int64_t x1 = std::clamp<int64_t>(int64_t(box.x) + box.w, 0, width);
    const int64_t y1 = std::clamp<int64_t>(int64_t(box.y) + box.h, 0, height);
    if (x1 <= x0 || y1 <= y0) fail(Errc::DegenerateResult, "box lies outside the image");
    return {int32_t(x0), int32_t(y0), int32_t(x1 - x0), int32_t(y1 - y0)};
}

void require_same_size(const ImageBuffer& img, const RegionMask& mask)
{
    if (img.width() != mask.width() || img.height() != mask.height())
        fail(Errc::DimensionMismatch, "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                          " vs mask " + std::to_string(mask.width()) + "x" +
                                          std::to_string(mask.height()));
}

void require_same_size(const ImageBuffer& a, const ImageBuffer& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        fail(Errc::DimensionMismatch, "image " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                          " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

RegionMask rasterize_contour(const Contour& contour, uint32_t width, uint32_t height)
{
    RegionMask mask(width, height);
    std::vector<const std::vector<Point>*> rings{&contour.outer()};
    for (const auto& h : contour.holes()) rings.push_back(&h);

    double min_y = INFINITY, max_y = -INFINITY;
    for (const auto* ring : rings)
        for (const Point& p : *ring) {
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    const int64_t row0 = std::max<int64_t>(0, int64_t(std::floor(min_y - 0.5)));
    const int64_t row1 = std::min<int64_t>(int64_t(height) - 1, int64_t(std::ceil(max_y)));

    std::vector<double> xs;
    for (int64_t y = row0; y <= row1; ++y) {
        const double py = double(y) + 0.5;
        xs.clear();
        for (const auto* ring : rings) {
            const size_t n = ring->size();
            for (size_t i = 0, j = n - 1; i < n; j = i++) {
                const Point& a = (*ring)[i];
                const Point& b = (*ring)[j];
                if ((a.y > py) != (b.y > py)) xs.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
            }
        }
        std::sort(xs.begin(), xs.end());
        // A center cx is inside when an odd number of crossings lie strictly to its right,
        // i.e. cx in [xs[2k], xs[2k+1]).
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            int64_t first = int64_t(std::ceil(xs[k] - 0.5));
            while (double(first) + 0.5 < xs[k]) ++first;
            while (double(first - 1) + 0.5 >= xs[k]) --first;
            int64_t last = int64_t(std::ceil(xs[k + 1] - 0.5)) - 1;
            while (double(last + 1) + 0.5 < xs[k + 1]) ++last;
            while (last >= first && double(last) + 0.5 >= xs[k + 1]) --last;
            first = std::max<int64_t>(first, 0);
            last = std::min<int64_t>(last, int64_t(width) - 1);
            for (int64_t x = first; x <= last; ++x) mask.set(uint32_t(x), uint32_t(y));
        }
    }
    return mask;
}

BoundingBox bbox_of_mask(const RegionMask& mask)
{
    uint32_t x0 = mask.width(), y0 = mask.height(), x1 = 0, y1 = 0;
    bool any = false;
    for (uint32_t y = 0; y < mask.height(); ++y)
        for (uint32_t x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                any = true;
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (!any) fail(Errc::EmptyMask, "mask has no selected pixels");
    return {int32_t(x0), int32_t(y0), int32_t(x1 - x0 + 1), int32_t(y1 - y0 + 1)};
}

RegionMask dilate_mask(const RegionMask& mask, uint32_t radius)
{
    if (radius == 0) return mask;
    const uint32_t w = mask.width(), h = mask.height();
    const int64_t r = radius;

    // Horizontal pass via running counts.
    RegionMask horiz(w, h);
    std::vector<uint32_t> prefix(w + 1);
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t* row = mask.bits().data() + size_t(y) * w;
        for (uint32_t x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (row[x] ? 1 : 0);
        uint8_t* out = horiz.bits().data() + size_t(y) * w;
        for (int64_t x = 0; x < w; ++x) {
            const int64_t lo = std::max<int64_t>(0, x - r);
            const int64_t hi = std::min<int64_t>(w, x + r + 1);
            out[x] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
        }
    }

    // Vertical pass: OR of the rows in the window.
    RegionMask out(w, h);
    const auto& k = kernels::active();
    for (int64_t y = 0; y < h; ++y) {
        const int64_t lo = std::max<int64_t>(0, y - r);
        const int64_t hi = std::min<int64_t>(h - 1, y + r);
        uint8_t* dst = out.bits().data() + size_t(y) * w;
        for (int64_t sy = lo; sy <= hi; ++sy) k.mask_or(dst, horiz.bits().data() + size_t(sy) * w, w);
    }
    return out;
}

RegionMask erode_mask(const RegionMask& mask, uint32_t radius)
{
    if (radius == 0) return mask;
    const uint32_t w = mask.width(), h = mask.height();
    const int64_t r = radius;
    const int64_t span = 2 * r + 1;

    RegionMask horiz(w, h);
    std::vector<uint32_t> prefix(w + 1);
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t* row = mask.bits().data() + size_t(y) * w;
        for (uint32_t x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (row[x] ? 1 : 0);
        uint8_t* out = horiz.bits().data() + size_t(y) * w;
        for (int64_t x = r; x + r < int64_t(w); ++x) out[x] = int64_t(prefix[x + r + 1] - prefix[x - r]) == span;
    }

    RegionMask out(w, h);
    std::vector<uint32_t> counts(w, 0);
    // Sliding column counts over a window of `span` rows.
    for (int64_t y = 0; y < int64_t(h); ++y) {
        const uint8_t* add = horiz.bits().data() + size_t(y) * w;
        for (uint32_t x = 0; x < w; ++x) counts[x] += add[x];
        if (y - span >= 0) {
            const uint8_t* drop = horiz.bits().data() + size_t(y - span) * w;
            for (uint32_t x = 0; x < w; ++x) counts[x] -= drop[x];
        }
        if (y - r >= r) {
            uint8_t* dst = out.bits().data() + size_t(y - r) * w;
            for (uint32_t x = 0; x < w; ++x) dst[x] = counts[x] == uint32_t(span);
        }
    }
    return out;
}

ImageBuffer composite(const ImageBuffer& base, const ImageBuffer& overlay, const RegionMask& mask)
{
    require_same_size(base, overlay);
    require_same_size(base, mask);
    ImageBuffer out(base.width(), base.height());
    kernels::active().composite_select(base.data().data(), overlay.data().data(), mask.bits().data(),
                                       out.data().data(), base.pixel_count());
    return out;
}

ImageBuffer render_concern_overlay(const ImageBuffer& img, const RegionMask& mask, OverlayStyle style)
{
    require_same_size(img, mask);
    ImageBuffer out = img;
    if (style.thickness == 0) return out;
    const RegionMask inner = erode_mask(mask, style.thickness);
    for (uint32_t y = 0; y < img.height(); ++y)
        for (uint32_t x = 0; x < img.width(); ++x)
            if (mask.at(x, y) && !inner.at(x, y)) out.set(x, y, style.color);
    return out;
}

RegionMask mask_from_green_annotation(const ImageBuffer& annotated, const ImageBuffer& original,
                                      GreenThresholds t)
{
    require_same_size(annotated, original);
    RegionMask mask(annotated.width(), annotated.height());
    const auto a = annotated.data();
    const auto o = original.data();
    for (size_t i = 0; i < annotated.pixel_count(); ++i) {
        const uint8_t* p = &a[i * 4];
        const uint8_t* q = &o[i * 4];
        if (std::equal(p, p + 4, q)) continue;
        const int r = p[0], g = p[1], b = p[2];
        if (g >= t.min_green && g - r >= t.min_margin_red && g - b >= t.min_margin_blue) mask.bits()[i] = 1;
    }
    return mask;
}

void fill_rect(ImageBuffer& img, const BoundingBox& box, Rgba color)
{
    const int64_t x0 = std::max<int64_t>(0, box.x), y0 = std::max<int64_t>(0, box.y);
    const int64_t x1 = std::min<int64_t>(img.width(), int64_t(box.x) + box.w);
    const int64_t y1 = std::min<int64_t>(img.height(), int64_t(box.y) + box.h);
    for (int64_t y = y0; y < y1; ++y)
        for (int64_t x = x0; x < x1; ++x) img.set(uint32_t(x), uint32_t(y), color);
}

void stroke_rect(ImageBuffer& img, const BoundingBox& box, uint32_t thickness, Rgba color)
{
    const int32_t t = int32_t(std::min<int64_t>(thickness, std::min(box.w, box.h)));
    fill_rect(img, {box.x, box.y, box.w, t}, color);
    fill_rect(img, {box.x, box.bottom() - t, box.w, t}, color);
    fill_rect(img, {box.x, box.y, t, box.h}, color);
    fill_rect(img, {box.right() - t, box.y, t, box.h}, color);
}

void fill_disk(ImageBuffer& img, double cx, double cy, double radius, Rgba color)
{
    const int64_t x0 = std::max<int64_t>(0, int64_t(std::floor(cx - radius)));
    const int64_t y0 = std::max<int64_t>(0, int64_t(std::floor(cy - radius)));
    const int64_t x1 = std::min<int64_t>(int64_t(img.width()) - 1, int64_t(std::ceil(cx + radius)));
    const int64_t y1 = std::min<int64_t>(int64_t(img.height()) - 1, int64_t(std::ceil(cy + radius)));
    const double r2 = radius * radius;
    for (int64_t y = y0; y <= y1; ++y)
        for (int64_t x = x0; x <= x1; ++x) {
            const double dx = double(x) + 0.5 - cx;
            const double dy = double(y) + 0.5 - cy;
            if (dx * dx + dy * dy <= r2) img.set(uint32_t(x), uint32_t(y), color);
        }
}

void draw_line(ImageBuffer& img, int32_t x0, int32_t y0, int32_t x1, int32_t y1, Rgba color)
{
    const int32_t dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int32_t dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int32_t err = dx + dy;
    while (true) {
        if (img.contains(x0, y0)) img.set(uint32_t(x0), uint32_t(y0), color);
        if (x0 == x1 && y0 == y1) break;
        const int32_t e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

} // namespace shroud
