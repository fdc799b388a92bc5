#include "twolink/kinematics.hpp"

#include <cmath>
#include <numbers>

namespace twolink {

double ToolPoint::norm() const { return std::hypot(x, y); }

ToolPoint tool_position(const RobotParams& params, const ChartPoint& q) {
    return {params.l1 * std::cos(q.theta1) + params.l2 * std::cos(q.theta2),
            params.l1 * std::sin(q.theta1) + params.l2 * std::sin(q.theta2)};
}

ToolJacobian tool_jacobian(const RobotParams& params, const ChartPoint& q) {
    ToolJacobian j;
    j.a11 = -params.l1 * std::sin(q.theta1);
    j.a12 = -params.l2 * std::sin(q.theta2);
    j.a21 = params.l1 * std::cos(q.theta1);
    j.a22 = params.l2 * std::cos(q.theta2);
    return j;
}

double singularity_margin(const RobotParams& params, const ChartPoint& q) {
    return params.l1 * params.l2 * std::abs(std::sin(q.theta2 - q.theta1));
}

WorkspaceLocation workspace_contains(const RobotParams& params, const ToolPoint& p, double tol) {
    const double r = p.norm();
    const double inner = std::abs(params.l1 - params.l2);
    const double outer = params.l1 + params.l2;
    if (std::abs(r - outer) <= tol || std::abs(r - inner) <= tol)
        return WorkspaceLocation::boundary;
    if (r > outer || r < inner) return WorkspaceLocation::outside;
    return WorkspaceLocation::inside;
}

double MarginGrid::axis_value(int i) const {
    return -std::numbers::pi + 2.0 * std::numbers::pi * i / (n - 1);
}

MarginGrid singularity_map(const RobotParams& params, int grid_n) {
    if (grid_n < 2) throw ValidationError("singularity_map: grid_n must be >= 2");
    MarginGrid grid;
    grid.n = grid_n;
    grid.values.resize(static_cast<std::size_t>(grid_n) * grid_n);
    for (int i = 0; i < grid_n; ++i) {
        const double t1 = grid.axis_value(i);
        for (int j = 0; j < grid_n; ++j)
            grid.values[static_cast<std::size_t>(i) * grid_n + j] =
                singularity_margin(params, {t1, grid.axis_value(j)});
    }
    return grid;
}

} // namespace twolink
