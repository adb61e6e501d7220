#pragma once

namespace rmtgrid {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rmtgrid
