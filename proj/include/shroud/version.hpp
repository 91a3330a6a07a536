#pragma once

#include <string_view>

namespace shroud {

inline constexpr std::string_view kToolVersion = "0.1.0";

} // namespace shroud
