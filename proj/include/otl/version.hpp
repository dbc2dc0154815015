#pragma once

namespace otl {

inline constexpr const char* kVersion = "otl 0.1.0";

}  // namespace otl
