#pragma once

namespace dedisp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dedisp
