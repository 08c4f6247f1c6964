#pragma once

namespace mctsbp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mctsbp
