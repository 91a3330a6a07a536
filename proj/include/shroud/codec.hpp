#pragma once

#include "shroud/image.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shroud {

enum class ImageFormat { Png, Jpeg };

std::optional<ImageFormat> parse_format(std::string_view tag);
std::string_view format_name(ImageFormat f);
// Sniffs magic bytes.
std::optional<ImageFormat> detect_format(std::span<const uint8_t> bytes);

// The hint is advisory; magic bytes win when they disagree.
ImageBuffer load_image(std::span<const uint8_t> bytes, std::optional<ImageFormat> hint = std::nullopt);
std::vector<uint8_t> save_image(const ImageBuffer& img, ImageFormat format, int jpeg_quality = 92);

// Masks travel as 1-bit grayscale PNG; any nonzero sample decodes as selected.
std::vector<uint8_t> encode_mask_png(const RegionMask& mask);
RegionMask decode_mask_png(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);
void write_file(const std::string& path, std::string_view text);

} // namespace shroud
