// Compiled with -mavx2; only reached after a runtime CPU check.

#include "shroud/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

#include <algorithm>

namespace shroud::kernels {
namespace {

void composite_select(const uint8_t* base, const uint8_t* overlay, const uint8_t* mask, uint8_t* out, size_t pixels)
{
    size_t i = 0;
    const __m256i zero = _mm256_setzero_si256();
    for (; i + 8 <= pixels; i += 8) {
        const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + i * 4));
        const __m256i o = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(overlay + i * 4));
        const __m256i m32 = _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(mask + i)));
        const __m256i sel = _mm256_cmpgt_epi32(m32, zero);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i * 4), _mm256_blendv_epi8(b, o, sel));
    }
    for (; i < pixels; ++i) {
        const uint8_t* src = mask[i] ? overlay + i * 4 : base + i * 4;
        std::copy_n(src, 4, out + i * 4);
    }
}

inline void blur_row_pixel(const uint8_t* src, uint16_t* dst, int64_t x, int64_t last, const int32_t* weights,
                           int64_t radius)
{
    int32_t acc[4] = {0, 0, 0, 0};
    for (int64_t k = -radius; k <= radius; ++k) {
        const int64_t sx = std::clamp<int64_t>(x + k, 0, last);
        const int32_t w = weights[k + radius];
        for (int c = 0; c < 4; ++c) acc[c] += w * src[sx * 4 + c];
    }
    for (int c = 0; c < 4; ++c)
        dst[x * 4 + c] = uint16_t((acc[c] + (1 << (kIntermediateShift - 1))) >> kIntermediateShift);
}

void blur_row(const uint8_t* src, uint16_t* dst, uint32_t width, const int32_t* weights, uint32_t radius)
{
    const int64_t r = radius;
    const int64_t w = width;
    const int64_t last = w - 1;
    // Pixels whose whole window lies inside the row: [r, w - r). Two pixels per vector.
    const int64_t lo = std::min(r, w);
    const int64_t hi = std::max(lo, w - r);

    for (int64_t x = 0; x < lo; ++x) blur_row_pixel(src, dst, x, last, weights, r);

    const __m256i bias = _mm256_set1_epi32(1 << (kIntermediateShift - 1));
    int64_t x = lo;
    for (; x + 2 <= hi; x += 2) {
        __m256i acc = _mm256_setzero_si256();
        const uint8_t* p = src + (x - r) * 4;
        for (int64_t k = 0; k <= 2 * r; ++k) {
            const __m256i v = _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(p + k * 4)));
            acc = _mm256_add_epi32(acc, _mm256_mullo_epi32(v, _mm256_set1_epi32(weights[k])));
        }
        acc = _mm256_srli_epi32(_mm256_add_epi32(acc, bias), kIntermediateShift);
        const __m256i packed = _mm256_permute4x64_epi64(_mm256_packus_epi32(acc, acc), 0x08);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + x * 4), _mm256_castsi256_si128(packed));
    }
    for (; x < w; ++x) blur_row_pixel(src, dst, x, last, weights, r);
}

void blur_column(const uint16_t* const* rows, const int32_t* weights, uint32_t taps, uint8_t* dst, size_t count)
{
    constexpr int shift = kWeightBits + (kWeightBits - kIntermediateShift);
    const __m256i bias = _mm256_set1_epi32(1 << (shift - 1));
    const __m256i max = _mm256_set1_epi32(255);
    size_t i = 0;
    for (; i + 8 <= count; i += 8) {
        __m256i acc = _mm256_setzero_si256();
        for (uint32_t k = 0; k < taps; ++k) {
            const __m256i v = _mm256_cvtepu16_epi32(_mm_loadu_si128(reinterpret_cast<const __m128i*>(rows[k] + i)));
            acc = _mm256_add_epi32(acc, _mm256_mullo_epi32(v, _mm256_set1_epi32(weights[k])));
        }
        acc = _mm256_min_epi32(_mm256_srli_epi32(_mm256_add_epi32(acc, bias), shift), max);
        const __m256i w16 = _mm256_permute4x64_epi64(_mm256_packus_epi32(acc, acc), 0x08);
        const __m128i w8 = _mm_packus_epi16(_mm256_castsi256_si128(w16), _mm256_castsi256_si128(w16));
        _mm_storel_epi64(reinterpret_cast<__m128i*>(dst + i), w8);
    }
    for (; i < count; ++i) {
        int32_t acc = 0;
        for (uint32_t k = 0; k < taps; ++k) acc += weights[k] * rows[k][i];
        dst[i] = uint8_t(std::min((acc + (1 << (shift - 1))) >> shift, 255));
    }
}

void mask_or(uint8_t* acc, const uint8_t* src, size_t count)
{
    size_t i = 0;
    for (; i + 32 <= count; i += 32) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + i));
        const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + i), _mm256_or_si256(a, s));
    }
    for (; i < count; ++i) acc[i] |= src[i];
}

} // namespace

const KernelTable* avx2_table_impl() noexcept
{
    static const KernelTable table{"avx2", composite_select, blur_row, blur_column, mask_or};
    return &table;
}

} // namespace shroud::kernels

#else

namespace shroud::kernels {
const KernelTable* avx2_table_impl() noexcept { return nullptr; }
} // namespace shroud::kernels

#endif
