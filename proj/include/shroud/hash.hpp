#pragma once

#include "shroud/image.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shroud {

std::string sha256_hex(std::span<const uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Hash of dimensions plus raw pixels; stable across codecs.
std::string image_hash(const ImageBuffer& img);

std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

// 64-bit FNV-1a, used where a cheap deterministic seed is enough.
uint64_t fnv1a64(std::string_view text) noexcept;

// Hex string of `bytes` random bytes from the system CSPRNG.
std::string random_token(size_t bytes = 16);

} // namespace shroud
