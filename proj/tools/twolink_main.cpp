#include <charconv>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "twolink/harness.hpp"
#include "twolink/sweeps.hpp"
#include "twolink/verify.hpp"

namespace {

std::string fmt(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt(*x) : std::string("-"); }

int run_simulate(const std::string& scenario_arg, const std::string& out_path,
                 const std::string& format) {
    const twolink::Scenario scenario = twolink::load_scenario_path(scenario_arg);
    const twolink::RunResult result = twolink::run(scenario);

    const std::string label = scenario.name.empty() ? scenario_arg : scenario.name;
    std::cout << "scenario " << label << ": " << result.trajectory.size() << " samples, "
              << fmt(result.trajectory.back().t) << " s simulated\n"
              << "  final tool error  " << fmt_opt(result.metrics.final_tool_error) << " m\n"
              << "  final speed       " << fmt(result.metrics.final_speed) << " (metric norm)\n"
              << "  settling time     " << fmt_opt(result.metrics.settling_time) << " s\n"
              << "  max |psi|         " << fmt_opt(result.metrics.max_psi) << "\n"
              << "  min sing margin   " << fmt(result.metrics.min_sing_margin) << "\n"
              << "  energy residual   " << fmt(result.metrics.energy_residual) << "\n";

    if (!out_path.empty()) {
        const auto kind =
            format == "json" ? twolink::ExportFormat::json : twolink::ExportFormat::csv;
        twolink::export_to_file(result.trajectory, result.metrics, kind, out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int run_christoffel_check(int n, double tol, std::uint64_t seed, bool serial) {
    const twolink::RobotParams params = twolink::RobotParams::defaults();
    const auto points = twolink::random_chart_points(static_cast<std::size_t>(n), seed);
    const twolink::SweepStats stats = twolink::christoffel_mismatch_sweep(
        params, points, serial ? twolink::ExecMode::serial : twolink::ExecMode::parallel);
    const twolink::ChartPoint worst = points[stats.worst_index];
    std::cout << "checked " << n << " random chart points\n"
              << "max |closed form - finite difference| = " << fmt(stats.max_abs_err) << " at ("
              << fmt(worst.theta1) << ", " << fmt(worst.theta2) << "), tolerance " << fmt(tol)
              << "\n";
    if (stats.max_abs_err > tol) {
        std::cerr << "connection coefficients disagree beyond tolerance\n";
        return 1;
    }
    return 0;
}

int run_singularity_map(int grid_n, const std::string& out_path) {
    const twolink::RobotParams params = twolink::RobotParams::defaults();
    const twolink::MarginGrid grid =
        twolink::margin_raster(params, grid_n, twolink::ExecMode::parallel);
    double max_margin = 0.0;
    int max_i = 0, max_j = 0;
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            if (grid.at(i, j) > max_margin) {
                max_margin = grid.at(i, j);
                max_i = i;
                max_j = j;
            }
    std::cout << grid.n << "x" << grid.n << " margin raster over [-pi, pi]^2\n"
              << "max |det Dx| = " << fmt(max_margin) << " at (" << fmt(grid.axis_value(max_i))
              << ", " << fmt(grid.axis_value(max_j)) << ")\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw twolink::IoError("cannot open \"" + out_path + "\" for writing");
        out << "theta1,theta2,margin\n";
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j)
                out << fmt(grid.axis_value(i)) << ',' << fmt(grid.axis_value(j)) << ','
                    << fmt(grid.at(i, j)) << '\n';
        if (!out) throw twolink::IoError("write to \"" + out_path + "\" failed");
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int run_verify() {
    const auto results = twolink::run_verification();
    std::size_t passed = 0;
    for (const twolink::CheckResult& r : results) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << "\n";
        if (r.passed) ++passed;
    }
    std::cout << passed << "/" << results.size() << " checks passed\n";
    return twolink::all_passed(results) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-link manipulator: geometric dynamics, feedback laws and diagnostics"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a scenario file or built-in name");
    std::string scenario_arg, out_path, format = "csv";
    sim->add_option("scenario", scenario_arg,
                    "scenario path, or one of: paper-sim-1, paper-sim-2, paper-constrained")
        ->required();
    sim->add_option("--out", out_path, "write the trajectory to this path");
    sim->add_option("--format", format, "export format (default csv)")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* christoffel = app.add_subcommand(
        "christoffel-check", "compare closed-form connection coefficients with the "
                             "finite-difference construction at random points");
    int n_points = 1000;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    bool serial = false;
    christoffel->add_option("--n", n_points, "number of random points (default 1000)")
        ->check(CLI::PositiveNumber);
    christoffel->add_option("--tol", tol, "entrywise tolerance (default 1e-8)")
        ->check(CLI::PositiveNumber);
    christoffel->add_option("--seed", seed, "point generator seed (default 1)");
    christoffel->add_flag("--serial", serial, "use the serial reference path");

    auto* sing_map = app.add_subcommand("singularity-map",
                                        "raster |det Dx| over the chart square");
    int grid_n = 101;
    std::string map_out;
    sing_map->add_option("--grid", grid_n, "grid resolution per axis (default 101)")
        ->check(CLI::Range(2, 100000));
    sing_map->add_option("--out", map_out, "write theta1,theta2,margin rows to this path");

    auto* verify = app.add_subcommand("verify", "run the full invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (sim->parsed()) return run_simulate(scenario_arg, out_path, format);
        if (christoffel->parsed()) return run_christoffel_check(n_points, tol, seed, serial);
        if (sing_map->parsed()) return run_singularity_map(grid_n, map_out);
        if (verify->parsed()) return run_verify();
    } catch (const twolink::ParseError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const twolink::ValidationError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const twolink::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
