#pragma once
#include <functional>
#include <optional>
#include <string>

#include "twolink/dynamics.hpp"
#include "twolink/geometry.hpp"
#include "twolink/kinematics.hpp"

namespace twolink {

/// Feedback gains. eps1 regularizes the squared gradient norm in the normal
/// force; eps2 regularizes the normalization in the tangential projection.
struct Gains {
    double k1 = 1.0;     // potential gain on the squared tool error
    double k = 1.0;      // velocity friction gain
    double eps1 = 1e-28;
    double eps2 = 1e-28;

    /// Throws ValidationError unless k1 > 0, k > 0, eps1 >= 0, eps2 >= 0.
    void validate() const;
};

/// Scalar constraint on the tool, Phi = 0 defining the admissible curve in
/// the workspace. The induced configuration constraint is psi = Phi o x.
struct ConstraintSpec {
    std::function<double(const ToolPoint&)> phi;
    std::function<ToolPoint(const ToolPoint&)> grad_phi;  // (dPhi/dx, dPhi/dy)
    std::string description;

    // Populated for the built-in ellipse so scenarios can serialize it.
    double a = 0.0, b = 0.0;
    ToolPoint center{0.0, 0.0};

    /// ((x-cx)/a)^2 + ((y-cy)/b)^2 - 1. Throws ValidationError unless
    /// a > 0 and b > 0.
    static ConstraintSpec ellipse(double a, double b, ToolPoint center = {0.0, 0.0});
};

/// A control evaluation with its decomposition. When a constraint is active,
/// u = lambda * grad(psi) + tangential_component.
struct ControlOutput {
    TangentVector u;
    std::optional<double> lambda;
    std::optional<TangentVector> normal_component;
    std::optional<TangentVector> tangential_component;
    std::optional<double> psi_residual;
};

/// V(q) = k1/2 ||x(q) - x_d||^2.
double lasalle_potential(const RobotParams& params, const ChartPoint& q, const ToolPoint& x_d,
                         double k1);

/// Metric gradient of the potential above: G^{-1} Dx^T k1 (x(q) - x_d).
/// Vanishes wherever the tool sits at x_d; at singular configurations it can
/// also vanish with the tool away from x_d (the regulator's blind spots).
TangentVector grad_lasalle(const RobotParams& params, const ChartPoint& q, const ToolPoint& x_d,
                           double k1);

/// Tool regulator u = grad(U) - k v - grad(V). Drives the tool to x_d with
/// zero final velocity from almost every initial state.
ControlOutput tool_regulator(const RobotParams& params, const JointState& s, const ToolPoint& x_d,
                             const Gains& gains, const PotentialSpec& potential);

/// psi(q) = Phi(x(q)).
double psi(const RobotParams& params, const ChartPoint& q, const ConstraintSpec& c);

/// Differential of psi as a joint covector, Dx^T grad(Phi). Throws
/// SingularGradientError if grad(Phi) vanishes at the tool point (the
/// constraint must be a submersion wherever it is queried).
Covector psi_differential(const RobotParams& params, const ChartPoint& q, const ConstraintSpec& c);

/// Metric gradient of psi, G^{-1} Dx^T grad(Phi).
TangentVector grad_psi(const RobotParams& params, const ChartPoint& q, const ConstraintSpec& c);

/// Multiplier of the normal force keeping psi = 0 invariant:
///   lambda = -g(D(grad psi)/Dt, v) / (|grad psi|_g^2 + eps1),
/// the covariant derivative taken along the motion.
double lambda_normal(const RobotParams& params, const JointState& s, const ConstraintSpec& c,
                     double eps1);

/// w - g(w, n) n with n = grad(psi)/(|grad psi|_g + eps2). At eps2 = 0 this
/// is the exact g-orthogonal projection onto ker(d psi); where grad(psi)
/// itself vanishes the vector is returned unchanged.
TangentVector project_tangent(const RobotParams& params, const ChartPoint& q,
                              const TangentVector& w, const ConstraintSpec& c, double eps2);

/// Constrained regulator u = lambda grad(psi) - (grad V)_par - k v_par:
/// normal force to stay on the constraint, projected potential and friction
/// to move along it. Diagnostics carry the decomposition.
ControlOutput constrained_regulator(const RobotParams& params, const JointState& s,
                                    const ToolPoint& x_d, const Gains& gains,
                                    const ConstraintSpec& c);

/// Produce a state exactly on the constraint with tangent velocity: Newton
/// iteration on psi from q_guess (steps along grad psi), then tangential
/// projection of v_guess at eps2 = 0. Throws NoConvergenceError after 50
/// steps, SingularGradientError if |grad psi|_g < 1e-10 at an iterate.
/// newton_steps, when given, receives the number of iterations used.
JointState init_on_constraint(const RobotParams& params, const ChartPoint& q_guess,
                              const TangentVector& v_guess, const ConstraintSpec& c,
                              int* newton_steps = nullptr);

} // namespace twolink
