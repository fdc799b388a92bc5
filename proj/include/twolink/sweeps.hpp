#pragma once
#include <cstdint>
#include <vector>

#include "twolink/geometry.hpp"
#include "twolink/kinematics.hpp"

namespace twolink {

/// Every sweep has a serial reference path and an OpenMP path. Points are
/// generated up front and each result is written to its own slot, so both
/// paths produce bit-identical output for any thread count.
enum class ExecMode { serial, parallel };

struct SweepStats {
    double max_abs_err = 0.0;
    std::size_t worst_index = 0;
};

/// n chart points uniform on [-pi, pi]^2 from a fixed-seed generator.
std::vector<ChartPoint> random_chart_points(std::size_t n, std::uint64_t seed);

/// Max entrywise |closed-form - finite-difference| of the connection
/// coefficients over the points. Valid params keep the metric positive
/// definite everywhere, so the kernel is total.
SweepStats christoffel_mismatch_sweep(const RobotParams& params,
                                      const std::vector<ChartPoint>& points, ExecMode mode);

/// Max |det Dx - l1 l2 sin(t2 - t1)| / (l1 l2) over the points (relative to
/// the determinant's full scale).
SweepStats det_identity_sweep(const RobotParams& params, const std::vector<ChartPoint>& points,
                              ExecMode mode);

/// Same raster as singularity_map, with a selectable execution path; the
/// serial path is the reference the parallel one is tested against.
MarginGrid margin_raster(const RobotParams& params, int grid_n, ExecMode mode);

} // namespace twolink
