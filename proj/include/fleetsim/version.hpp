#pragma once

namespace fleetsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fleetsim
