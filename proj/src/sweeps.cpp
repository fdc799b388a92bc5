#include "twolink/sweeps.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace twolink {

namespace {

/// Per-point errors are written to independent slots, then reduced serially:
/// identical output for every thread count.
template <typename PerPoint>
SweepStats run_sweep(const std::vector<ChartPoint>& points, ExecMode mode, PerPoint per_point) {
    std::vector<double> err(points.size(), 0.0);
    const long n = static_cast<long>(points.size());
    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) err[i] = per_point(points[i]);
    } else {
        for (long i = 0; i < n; ++i) err[i] = per_point(points[i]);
    }
    SweepStats stats;
    for (std::size_t i = 0; i < err.size(); ++i)
        if (err[i] > stats.max_abs_err) {
            stats.max_abs_err = err[i];
            stats.worst_index = i;
        }
    return stats;
}

} // namespace

std::vector<ChartPoint> random_chart_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<ChartPoint> points(n);
    for (ChartPoint& p : points) {
        p.theta1 = angle(rng);
        p.theta2 = angle(rng);
    }
    return points;
}

SweepStats christoffel_mismatch_sweep(const RobotParams& params,
                                      const std::vector<ChartPoint>& points, ExecMode mode) {
    const MetricFn metric_fn = [&params](const ChartPoint& q) { return metric_at(params, q); };
    return run_sweep(points, mode, [&](const ChartPoint& q) {
        const Christoffel closed = christoffel_closed_form(params, q);
        const Christoffel oracle = christoffel_oracle(metric_fn, q);
        double worst = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    worst = std::max(worst, std::abs(closed(k, i, j) - oracle(k, i, j)));
        return worst;
    });
}

SweepStats det_identity_sweep(const RobotParams& params, const std::vector<ChartPoint>& points,
                              ExecMode mode) {
    const double scale = params.l1 * params.l2;
    return run_sweep(points, mode, [&](const ChartPoint& q) {
        const double assembled = tool_jacobian(params, q).det();
        const double closed = scale * std::sin(q.theta2 - q.theta1);
        return std::abs(assembled - closed) / scale;
    });
}

MarginGrid margin_raster(const RobotParams& params, int grid_n, ExecMode mode) {
    if (grid_n < 2) throw ValidationError("margin_raster: grid_n must be >= 2");
    if (mode == ExecMode::serial) return singularity_map(params, grid_n);

    MarginGrid grid;
    grid.n = grid_n;
    grid.values.resize(static_cast<std::size_t>(grid_n) * grid_n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < grid_n; ++i) {
        const double t1 = grid.axis_value(static_cast<int>(i));
        for (int j = 0; j < grid_n; ++j)
            grid.values[static_cast<std::size_t>(i) * grid_n + j] =
                singularity_margin(params, {t1, grid.axis_value(j)});
    }
    return grid;
}

} // namespace twolink
