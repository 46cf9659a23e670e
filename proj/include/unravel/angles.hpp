// angles.hpp — Principal-value reduction for phases.

#pragma once

#include <cmath>

namespace unravel {

// Reduce an angle to (-pi, pi].
inline double principal_value(double angle) {
    double r = std::remainder(angle, 2.0 * M_PI);
    if (r <= -M_PI) r += 2.0 * M_PI;
    return r;
}

// |a - b| measured on the circle.
inline double principal_distance(double a, double b) {
    return std::abs(principal_value(a - b));
}

}  // namespace unravel
