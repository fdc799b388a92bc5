#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twolink/control.hpp"
#include "twolink/dynamics.hpp"

namespace twolink {

enum class ControllerKind { free, tool_regulator, normal_only, constrained };

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& name);

/// A complete run description: plant constants, initial state, feedback law
/// and its references, integration settings, and the thresholds the run is
/// expected to meet (kept as data so they live in scenario files, not code).
struct Scenario {
    std::string name;
    RobotParams params = RobotParams::defaults();
    JointState initial;           // or the projection guess, see below
    bool project_initial = false; // run init_on_constraint on `initial` first

    ControllerKind controller = ControllerKind::free;
    std::optional<ToolPoint> x_d;            // tool_regulator, constrained
    std::optional<ConstraintSpec> constraint; // normal_only, constrained
    Gains gains;

    PotentialSpec potential;  // defaults to none
    double dt = 1e-3;
    double duration = 10.0;
    int stride = 10;

    double settle_tol = 1e-3;                 // m, for the settling-time metric
    std::optional<double> tool_error_tol;     // contract: final tool error
    std::optional<double> speed_tol;          // contract: final |v|_g
    std::optional<double> psi_tol;            // contract: max |psi| over the run

    /// Throws ValidationError naming the offending field.
    void validate() const;

    /// The three built-in runs: "paper-sim-1", "paper-sim-2",
    /// "paper-constrained". Throws ValidationError for other names.
    static Scenario builtin(const std::string& name);
    static bool is_builtin(const std::string& name);
    static std::vector<std::string> builtin_names();
};

/// Parse a scenario document: flat key = value lines ('#' comments), or a
/// JSON object with the same keys if the first character is '{'. A bare
/// built-in name is also accepted. Throws ParseError (malformed) or
/// ValidationError (well-formed but inconsistent).
Scenario load_scenario(const std::string& text);

/// load_scenario on a file's contents; a built-in name is resolved directly.
Scenario load_scenario_path(const std::string& path_or_builtin);

/// Summary numbers distilled from one trajectory.
struct RunMetrics {
    std::optional<double> final_tool_error; // m, last sample; absent without a reference
    double final_speed = 0.0;               // |v|_g, last sample
    std::optional<double> settling_time;    // first time after which tool error stays < settle_tol
    std::optional<double> max_psi;          // constrained runs only
    double min_sing_margin = 0.0;
    double energy_residual = 0.0;           // energy_rate_residual of the sampled run
};

RunMetrics compute_metrics(const RobotParams& params, const Trajectory& traj,
                           const std::optional<ToolPoint>& x_d, double settle_tol);

struct RunResult {
    Trajectory trajectory;
    RunMetrics metrics;
};

/// simulate + compute_metrics.
RunResult run(const Scenario& scenario);

/// The feedback law and the sample annotator realizing a scenario's
/// controller choice (projection of the initial state is simulate's job).
ControlLaw make_control_law(const Scenario& scenario);
SampleAnnotator make_annotator(const Scenario& scenario);

enum class ExportFormat { csv, json };

/// CSV columns, in order: t, theta1, theta2, theta1_wrapped, theta2_wrapped,
/// v1, v2, tool_x, tool_y, u1, u2, lambda, psi, kinetic, potential,
/// total_energy, power, sing_margin. lambda and psi are empty when absent.
/// Doubles are written in shortest round-trip form.
std::string export_csv(const Trajectory& traj);

/// JSON document with "samples" (same fields as the CSV, null where absent)
/// and a "metrics" object. Round-trips bit-identically through a JSON parser.
std::string export_json(const Trajectory& traj, const RunMetrics& metrics);

/// Serialize to a file. Throws IoError on failure.
void export_to_file(const Trajectory& traj, const RunMetrics& metrics, ExportFormat format,
                    const std::string& path);

/// Re-parse an export_json document back into samples (for fidelity tests).
Trajectory import_json(const std::string& text);

/// One critical point of the regulated potential restricted to the
/// constraint curve: a place where the derivative of ||tool - x_d||^2 along
/// the curve vanishes. Minima are the rest points the constrained regulator
/// can converge to; any minimum with tool_error > 0 is a spurious target.
struct ConstraintCriticalPoint {
    double phi_param = 0.0;   // ellipse parameter of the tool point
    ToolPoint tool;
    double tool_error = 0.0;  // distance to x_d
    bool is_minimum = false;
};

/// Scan the constraint curve for critical points of the regulated potential
/// along it: sample the along-curve derivative of ||p(phi) - x_d||^2 on a
/// grid, bisect every sign change. Only elliptical constraints are scanned.
std::vector<ConstraintCriticalPoint> scan_constraint_critical_points(
    const ConstraintSpec& c, const ToolPoint& x_d, int samples = 720);

} // namespace twolink
