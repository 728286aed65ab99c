#pragma once

namespace sparsetde {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace sparsetde
