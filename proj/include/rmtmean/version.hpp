#pragma once

namespace rmtmean {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rmtmean
