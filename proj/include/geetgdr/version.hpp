#pragma once

namespace geetgdr {

inline constexpr const char* version = "1.0.0";

} // namespace geetgdr
