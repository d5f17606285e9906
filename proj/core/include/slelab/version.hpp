#pragma once

namespace slelab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace slelab
