#pragma once

namespace specgp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace specgp
