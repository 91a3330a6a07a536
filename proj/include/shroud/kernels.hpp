#pragma once

// Data-parallel inner loops behind image-core and the obfuscation engine.
// Every kernel has a scalar reference; vector variants must produce
// bit-identical output (integer arithmetic only) and are selected once at
// runtime. Set SHROUD_SIMD=scalar to force the reference path.

#include <cstddef>
#include <cstdint>

namespace shroud::kernels {

// Gaussian taps are Q14 fixed point summing to exactly 1 << kWeightBits.
inline constexpr int kWeightBits = 14;
// Horizontal pass output keeps 8 fractional bits.
inline constexpr int kIntermediateShift = 6;

struct KernelTable {
    const char* name;

    // out[i] = mask[i] ? overlay[i] : base[i], per RGBA pixel.
    void (*composite_select)(const uint8_t* base, const uint8_t* overlay, const uint8_t* mask, uint8_t* out,
                             size_t pixels);

    // Edge-clamped horizontal convolution of one RGBA row into Q8 intermediates.
    // weights has 2 * radius + 1 taps.
    void (*blur_row)(const uint8_t* src, uint16_t* dst, uint32_t width, const int32_t* weights, uint32_t radius);

    // Vertical convolution: rows[k] points at the (already clamped) k-th source
    // row of `count` Q8 samples; writes rounded 8-bit results.
    void (*blur_column)(const uint16_t* const* rows, const int32_t* weights, uint32_t taps, uint8_t* dst,
                        size_t count);

    // acc[i] |= src[i]
    void (*mask_or)(uint8_t* acc, const uint8_t* src, size_t count);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the binary lacks the variant or the CPU does not support it.
const KernelTable* avx2_table() noexcept;
const KernelTable& active() noexcept;

} // namespace shroud::kernels
