#include "shroud/kernels.hpp"

#include <algorithm>

namespace shroud::kernels {
namespace {

void composite_select(const uint8_t* base, const uint8_t* overlay, const uint8_t* mask, uint8_t* out, size_t pixels)
{
    for (size_t i = 0; i < pixels; ++i) {
        const uint8_t* src = mask[i] ? overlay + i * 4 : base + i * 4;
        std::copy_n(src, 4, out + i * 4);
    }
}

void blur_row(const uint8_t* src, uint16_t* dst, uint32_t width, const int32_t* weights, uint32_t radius)
{
    const int64_t last = int64_t(width) - 1;
    for (int64_t x = 0; x < int64_t(width); ++x) {
        int32_t acc[4] = {0, 0, 0, 0};
        for (int64_t k = -int64_t(radius); k <= int64_t(radius); ++k) {
            const int64_t sx = std::clamp<int64_t>(x + k, 0, last);
            const int32_t w = weights[k + radius];
            const uint8_t* p = src + sx * 4;
            for (int c = 0; c < 4; ++c) acc[c] += w * p[c];
        }
        for (int c = 0; c < 4; ++c)
            dst[x * 4 + c] = uint16_t((acc[c] + (1 << (kIntermediateShift - 1))) >> kIntermediateShift);
    }
}

void blur_column(const uint16_t* const* rows, const int32_t* weights, uint32_t taps, uint8_t* dst, size_t count)
{
    constexpr int shift = kWeightBits + (kWeightBits - kIntermediateShift);
    for (size_t i = 0; i < count; ++i) {
        int32_t acc = 0;
        for (uint32_t k = 0; k < taps; ++k) acc += weights[k] * rows[k][i];
        dst[i] = uint8_t(std::min((acc + (1 << (shift - 1))) >> shift, 255));
    }
}

void mask_or(uint8_t* acc, const uint8_t* src, size_t count)
{
    for (size_t i = 0; i < count; ++i) acc[i] |= src[i];
}

} // namespace

const KernelTable& scalar_table() noexcept
{
    static const KernelTable table{"scalar", composite_select, blur_row, blur_column, mask_or};
    return table;
}

} // namespace shroud::kernels
