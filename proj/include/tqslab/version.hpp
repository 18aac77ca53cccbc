#pragma once

namespace tqslab {

inline constexpr const char* kToolName = "tqslab";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace tqslab
