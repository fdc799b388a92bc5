#pragma once
#include <vector>

#include "twolink/geometry.hpp"

namespace twolink {

/// End-effector position in the fixed plane (m).
struct ToolPoint {
    double x = 0.0;
    double y = 0.0;

    ToolPoint operator-(const ToolPoint& o) const { return {x - o.x, y - o.y}; }
    double norm() const;
};

/// Differential of the tool map, columns d(tool)/d(theta1), d(tool)/d(theta2).
struct ToolJacobian {
    double a11, a12;
    double a21, a22;

    double det() const { return a11 * a22 - a12 * a21; }

    /// Transpose applied to a workspace vector, giving a joint covector.
    Covector transpose_apply(const ToolPoint& w) const {
        return {a11 * w.x + a21 * w.y, a12 * w.x + a22 * w.y};
    }
};

enum class WorkspaceLocation { inside, boundary, outside };

/// Tool map x(q) = (l1 cos t1 + l2 cos t2, l1 sin t1 + l2 sin t2).
ToolPoint tool_position(const RobotParams& params, const ChartPoint& q);

/// Dx(q) = [[-l1 sin t1, -l2 sin t2], [l1 cos t1, l2 cos t2]];
/// det Dx = l1 l2 sin(t2 - t1).
ToolJacobian tool_jacobian(const RobotParams& params, const ChartPoint& q);

/// |det Dx| = l1 l2 |sin(t2 - t1)|. Zero exactly at the singular
/// configurations wrap(t2 - t1) in {0, pi}.
double singularity_margin(const RobotParams& params, const ChartPoint& q);

/// Classify a workspace point against the reachable annulus
/// |l1 - l2| <= ||p|| <= l1 + l2, with a radial tolerance for "boundary".
WorkspaceLocation workspace_contains(const RobotParams& params, const ToolPoint& p,
                                     double tol = 1e-9);

/// n x n raster of singularity_margin over [-pi, pi]^2, endpoints included.
struct MarginGrid {
    int n = 0;
    std::vector<double> values;  // row-major, index [i*n + j] for (theta1_i, theta2_j)

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
    /// Axis sample i in [0, n): -pi + 2 pi i / (n - 1).
    double axis_value(int i) const;
};

/// Throws ValidationError if grid_n < 2.
MarginGrid singularity_map(const RobotParams& params, int grid_n);

} // namespace twolink
