#pragma once

namespace nlrd {

inline constexpr const char* kToolName = "nlrd";
inline constexpr const char* kVersion = "0.1.0";

} // namespace nlrd
