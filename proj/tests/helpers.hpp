#pragma once

#include <comogcn/trajdata.hpp>

#include <cmath>
#include <vector>

namespace testutil {

// Track starting at (x0, y0) that takes the given per-step displacements.
inline comogcn::Trajectory walk(double x0, double y0, const std::vector<Eigen::Vector2d>& steps) {
    comogcn::Trajectory t(static_cast<Eigen::Index>(steps.size()) + 1, 2);
    t.row(0) << x0, y0;
    for (std::size_t k = 0; k < steps.size(); ++k)
        t.row(static_cast<Eigen::Index>(k) + 1) = t.row(static_cast<Eigen::Index>(k)) + steps[k].transpose();
    return t;
}

inline comogcn::Trajectory straight(double x0, double y0, double vx, double vy, int frames) {
    return walk(x0, y0, std::vector<Eigen::Vector2d>(static_cast<std::size_t>(frames - 1), Eigen::Vector2d(vx, vy)));
}

inline Eigen::Vector2d heading_step(double angle, double speed) {
    return {speed * std::cos(angle), speed * std::sin(angle)};
}

}  // namespace testutil
