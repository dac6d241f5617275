#pragma once

namespace linimpute {

inline constexpr const char* kVersion = "0.1.0";

} // namespace linimpute
