#pragma once

#include <cmath>
#include <cstddef>

namespace peerlearn::detail {

// Products like 0.1 * 90 / 0.9 land a few ulps above or below the integer the
// formula means. Counts snap to the nearest integer within this slack first.
inline constexpr double kCountSlack = 1e-9;

inline std::size_t floor_count(double x) {
    return x <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(x + kCountSlack));
}

inline std::size_t ceil_count(double x) {
    return x <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(x - kCountSlack));
}

}  // namespace peerlearn::detail
