#pragma once

namespace qecclab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qecclab
