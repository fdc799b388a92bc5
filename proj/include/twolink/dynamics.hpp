#pragma once
#include <functional>
#include <optional>
#include <vector>

#include "twolink/geometry.hpp"
#include "twolink/kinematics.hpp"

namespace twolink {

/// Point of the tangent bundle: configuration plus velocity.
struct JointState {
    ChartPoint q;
    TangentVector v;

    bool finite() const;
};

/// Configuration-dependent potential. Default is no potential; the gravity
/// option places each link's center of mass at its midpoint,
/// U = g0 (m1 y_c1 + m2 y_c2).
struct PotentialSpec {
    enum class Kind { none, gravity };
    Kind kind = Kind::none;
    double g0 = 9.81;

    static PotentialSpec none() { return {}; }
    static PotentialSpec gravity(double g0 = 9.81) { return {Kind::gravity, g0}; }
};

double potential_energy(const RobotParams& params, const ChartPoint& q, const PotentialSpec& u);
Covector potential_differential(const RobotParams& params, const ChartPoint& q,
                                const PotentialSpec& u);

/// Energy bookkeeping at one sample. power is g(u, v), the rate at which the
/// control feeds energy into the system; for the uncontrolled system the
/// total is conserved.
struct EnergyReport {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double power = 0.0;
};

/// (1/2) v^T G(q) v. Nonnegative; zero only at v = 0.
double kinetic_energy(const RobotParams& params, const JointState& s);

/// Acceleration of the forced system in chart coordinates:
///   a^k = -Gamma^k_ij v^i v^j - (grad U)^k + u^k,
/// with u already a tangent vector (apply sharp first if starting from a
/// joint-torque covector). With u = 0 and no potential this is the geodesic
/// equation.
TangentVector forced_acceleration(const RobotParams& params, const JointState& s,
                                  const TangentVector& u, const PotentialSpec& potential);

/// Feedback law sampled continuously: (state, time) -> control tangent vector.
using ControlLaw = std::function<TangentVector(const JointState&, double)>;

/// One classical fourth-order Runge-Kutta step of size dt starting at time t;
/// the law is evaluated at every internal stage. Throws NonFiniteError
/// (carrying t + dt) if the result leaves the finite range.
JointState rk4_step(const RobotParams& params, const JointState& s, const ControlLaw& law,
                    const PotentialSpec& potential, double t, double dt);

/// One exported sample of a run. lambda and psi are present only when a
/// constraint is active.
struct TrajectorySample {
    double t = 0.0;
    JointState state;
    ToolPoint tool;
    TangentVector u;
    std::optional<double> lambda;
    std::optional<double> psi;
    EnergyReport energy;
    double sing_margin = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;

    std::size_t size() const { return samples.size(); }
    const TrajectorySample& front() const { return samples.front(); }
    const TrajectorySample& back() const { return samples.back(); }
};

/// Hook filling the constraint diagnostics of a freshly built sample.
using SampleAnnotator = std::function<void(TrajectorySample&)>;

/// Fixed-step driver: floor(duration/dt) steps from the initial state,
/// sampling every `stride` steps (the initial state is always sample 0).
/// Sample times are exact multiples of stride*dt.
Trajectory integrate(const RobotParams& params, const JointState& initial, const ControlLaw& law,
                     const PotentialSpec& potential, double dt, double duration, int stride,
                     const SampleAnnotator& annotate = nullptr);

struct Scenario;

/// Run a validated scenario (built-in feedback laws, constraint projection of
/// the initial state when requested). Defined with the scenario machinery.
Trajectory simulate(const Scenario& scenario);

/// Max over interior samples of |centered-difference dE/dt - g(u, v)|: how
/// well the run obeys the energy balance d/dt E = g(u, gamma'). Needs at
/// least 3 samples.
double energy_rate_residual(const Trajectory& traj);

} // namespace twolink
