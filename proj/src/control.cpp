#include "twolink/control.hpp"

#include <cmath>
#include <string>

namespace twolink {

void Gains::validate() const {
    if (!(k1 > 0.0)) throw ValidationError("Gains: k1 must be > 0");
    if (!(k > 0.0)) throw ValidationError("Gains: k must be > 0");
    if (!(eps1 >= 0.0)) throw ValidationError("Gains: eps1 must be >= 0");
    if (!(eps2 >= 0.0)) throw ValidationError("Gains: eps2 must be >= 0");
}

ConstraintSpec ConstraintSpec::ellipse(double a, double b, ToolPoint center) {
    if (!(a > 0.0)) throw ValidationError("ConstraintSpec: ellipse semi-axis a must be > 0");
    if (!(b > 0.0)) throw ValidationError("ConstraintSpec: ellipse semi-axis b must be > 0");
    ConstraintSpec c;
    c.a = a;
    c.b = b;
    c.center = center;
    c.phi = [a, b, center](const ToolPoint& p) {
        const double dx = (p.x - center.x) / a;
        const double dy = (p.y - center.y) / b;
        return dx * dx + dy * dy - 1.0;
    };
    c.grad_phi = [a, b, center](const ToolPoint& p) {
        return ToolPoint{2.0 * (p.x - center.x) / (a * a), 2.0 * (p.y - center.y) / (b * b)};
    };
    c.description = "ellipse a=" + std::to_string(a) + " b=" + std::to_string(b);
    return c;
}

double lasalle_potential(const RobotParams& params, const ChartPoint& q, const ToolPoint& x_d,
                         double k1) {
    const ToolPoint d = tool_position(params, q) - x_d;
    return 0.5 * k1 * (d.x * d.x + d.y * d.y);
}

TangentVector grad_lasalle(const RobotParams& params, const ChartPoint& q, const ToolPoint& x_d,
                           double k1) {
    const ToolPoint d = tool_position(params, q) - x_d;
    const Covector dV = tool_jacobian(params, q).transpose_apply({k1 * d.x, k1 * d.y});
    return metric_at(params, q).solve(dV);
}

ControlOutput tool_regulator(const RobotParams& params, const JointState& s, const ToolPoint& x_d,
                             const Gains& gains, const PotentialSpec& potential) {
    const MetricTensor g = metric_at(params, s.q);
    TangentVector u = -gains.k * s.v + (-grad_lasalle(params, s.q, x_d, gains.k1));
    if (potential.kind != PotentialSpec::Kind::none)
        u += g.solve(potential_differential(params, s.q, potential));
    ControlOutput out;
    out.u = u;
    return out;
}

double psi(const RobotParams& params, const ChartPoint& q, const ConstraintSpec& c) {
    return c.phi(tool_position(params, q));
}

Covector psi_differential(const RobotParams& params, const ChartPoint& q,
                          const ConstraintSpec& c) {
    const ToolPoint x = tool_position(params, q);
    const ToolPoint gphi = c.grad_phi(x);
    if (!(gphi.norm() > 0.0))
        throw SingularGradientError("constraint gradient vanished at tool point (" +
                                    std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
    return tool_jacobian(params, q).transpose_apply(gphi);
}

TangentVector grad_psi(const RobotParams& params, const ChartPoint& q, const ConstraintSpec& c) {
    return metric_at(params, q).solve(psi_differential(params, q, c));
}

double lambda_normal(const RobotParams& params, const JointState& s, const ConstraintSpec& c,
                     double eps1) {
    const MetricTensor g = metric_at(params, s.q);
    const TangentVector grad = grad_psi(params, s.q, c);
    const TangentVector dgrad = covariant_derivative_along(
        [&](const ChartPoint& p) { return grad_psi(params, p, c); }, s.q, s.v, params);
    const double denom = g.quad(grad) + eps1;
    if (!(denom > 0.0))
        throw SingularGradientError("lambda_normal: |grad psi|^2 + eps1 is not positive");
    return -g.inner(dgrad, s.v) / denom;
}

TangentVector project_tangent(const RobotParams& params, const ChartPoint& q,
                              const TangentVector& w, const ConstraintSpec& c, double eps2) {
    const MetricTensor g = metric_at(params, q);
    const TangentVector grad = grad_psi(params, q, c);
    const double norm = g.norm(grad);
    if (norm == 0.0 && eps2 == 0.0) return w;  // no normal direction to remove
    const TangentVector n = (1.0 / (norm + eps2)) * grad;
    return w - g.inner(w, n) * n;
}

ControlOutput constrained_regulator(const RobotParams& params, const JointState& s,
                                    const ToolPoint& x_d, const Gains& gains,
                                    const ConstraintSpec& c) {
    const TangentVector grad = grad_psi(params, s.q, c);
    const double lambda = lambda_normal(params, s, c, gains.eps1);
    const TangentVector normal = lambda * grad;

    const TangentVector grad_v_par =
        project_tangent(params, s.q, grad_lasalle(params, s.q, x_d, gains.k1), c, gains.eps2);
    const TangentVector v_par = project_tangent(params, s.q, s.v, c, gains.eps2);
    const TangentVector tangential = -grad_v_par + (-gains.k) * v_par;

    ControlOutput out;
    out.u = normal + tangential;
    out.lambda = lambda;
    out.normal_component = normal;
    out.tangential_component = tangential;
    out.psi_residual = psi(params, s.q, c);
    return out;
}

JointState init_on_constraint(const RobotParams& params, const ChartPoint& q_guess,
                              const TangentVector& v_guess, const ConstraintSpec& c,
                              int* newton_steps) {
    constexpr int kMaxSteps = 50;
    constexpr double kTolerance = 1e-13;

    ChartPoint q = q_guess;
    int steps = 0;
    double residual = psi(params, q, c);
    while (std::abs(residual) > kTolerance) {
        if (steps >= kMaxSteps)
            throw NoConvergenceError("init_on_constraint: |psi| = " + std::to_string(residual) +
                                     " after " + std::to_string(kMaxSteps) + " Newton steps");
        const MetricTensor g = metric_at(params, q);
        const TangentVector grad = grad_psi(params, q, c);
        const double norm2 = g.quad(grad);
        if (!(std::sqrt(norm2) >= 1e-10))
            throw SingularGradientError(
                "init_on_constraint: |grad psi| below 1e-10 at a Newton iterate");
        // Newton step along grad psi: d psi(grad psi) = |grad psi|_g^2
        const double scale = -residual / norm2;
        q = {q.theta1 + scale * grad.v1, q.theta2 + scale * grad.v2};
        ++steps;
        residual = psi(params, q, c);
    }
    if (newton_steps) *newton_steps = steps;
    return {q, project_tangent(params, q, v_guess, c, 0.0)};
}

} // namespace twolink
