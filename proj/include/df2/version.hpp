#pragma once

namespace df2 {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace df2
