#pragma once

namespace ckrbf {

inline constexpr const char* version = "0.1.0";

}  // namespace ckrbf
