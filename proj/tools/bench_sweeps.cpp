// Times the OpenMP sweep kernels against their serial references and checks
// that both produce bit-identical results.
#include <chrono>
#include <cstdio>
#include <string>

#include "twolink/sweeps.hpp"

using twolink::ExecMode;

namespace {

template <typename Fn>
double best_ms(int repeats, Fn fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto begin = std::chrono::steady_clock::now();
        fn();
        const auto end = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(end - begin).count());
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n_points = 100000;
    int grid_n = 2001;
    int repeats = 3;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--quick") {
            n_points = 2000;
            grid_n = 201;
            repeats = 1;
        } else {
            std::fprintf(stderr, "usage: %s [--quick]\n", argv[0]);
            return 2;
        }
    }

    const twolink::RobotParams params = twolink::RobotParams::defaults();
    const auto points = twolink::random_chart_points(n_points, 7);

    twolink::SweepStats conn_serial, conn_parallel;
    const double conn_s = best_ms(repeats, [&] {
        conn_serial = twolink::christoffel_mismatch_sweep(params, points, ExecMode::serial);
    });
    const double conn_p = best_ms(repeats, [&] {
        conn_parallel = twolink::christoffel_mismatch_sweep(params, points, ExecMode::parallel);
    });
    const bool conn_same = conn_serial.max_abs_err == conn_parallel.max_abs_err &&
                           conn_serial.worst_index == conn_parallel.worst_index;

    twolink::MarginGrid grid_serial, grid_parallel;
    const double grid_s = best_ms(repeats, [&] {
        grid_serial = twolink::margin_raster(params, grid_n, ExecMode::serial);
    });
    const double grid_p = best_ms(repeats, [&] {
        grid_parallel = twolink::margin_raster(params, grid_n, ExecMode::parallel);
    });
    const bool grid_same = grid_serial.values == grid_parallel.values;

    std::printf("kernel                      size        serial      openmp     speedup  match\n");
    std::printf("connection mismatch sweep   %-9zu %8.2f ms %8.2f ms   %5.2fx  %s\n", points.size(),
                conn_s, conn_p, conn_s / conn_p, conn_same ? "yes" : "NO");
    std::printf("singularity margin raster   %dx%-6d %8.2f ms %8.2f ms   %5.2fx  %s\n", grid_n,
                grid_n, grid_s, grid_p, grid_s / grid_p, grid_same ? "yes" : "NO");
    return conn_same && grid_same ? 0 : 1;
}
