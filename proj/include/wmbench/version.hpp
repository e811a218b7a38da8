#pragma once

namespace wmbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wmbench
