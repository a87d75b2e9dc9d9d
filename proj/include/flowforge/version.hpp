#pragma once

namespace flowforge {

inline constexpr const char* version_string = "flowforge 0.1.0";

}  // namespace flowforge
