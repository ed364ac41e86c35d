#pragma once

#include <cmath>
#include <limits>

namespace tsar {

// Missing values are quiet NaNs: any arithmetic involving one stays missing.
// Reductions in this library always filter missing entries explicitly.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

}  // namespace tsar
