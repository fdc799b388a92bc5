#include "twolink/dynamics.hpp"

#include <cmath>
#include <string>

namespace twolink {

bool JointState::finite() const {
    return std::isfinite(q.theta1) && std::isfinite(q.theta2) && std::isfinite(v.v1) &&
           std::isfinite(v.v2);
}

double potential_energy(const RobotParams& params, const ChartPoint& q, const PotentialSpec& u) {
    if (u.kind == PotentialSpec::Kind::none) return 0.0;
    // centers of mass at the link midpoints
    const double yc1 = 0.5 * params.l1 * std::sin(q.theta1);
    const double yc2 = params.l1 * std::sin(q.theta1) + 0.5 * params.l2 * std::sin(q.theta2);
    return u.g0 * (params.m1 * yc1 + params.m2 * yc2);
}

Covector potential_differential(const RobotParams& params, const ChartPoint& q,
                                const PotentialSpec& u) {
    if (u.kind == PotentialSpec::Kind::none) return {0.0, 0.0};
    return {u.g0 * (0.5 * params.m1 + params.m2) * params.l1 * std::cos(q.theta1),
            u.g0 * 0.5 * params.m2 * params.l2 * std::cos(q.theta2)};
}

double kinetic_energy(const RobotParams& params, const JointState& s) {
    return 0.5 * metric_at(params, s.q).quad(s.v);
}

TangentVector forced_acceleration(const RobotParams& params, const JointState& s,
                                  const TangentVector& u, const PotentialSpec& potential) {
    const Christoffel gamma = christoffel_closed_form(params, s.q);
    const double vv[2] = {s.v.v1, s.v.v2};
    double a[2];
    for (int k = 0; k < 2; ++k) {
        double quad = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) quad += gamma(k, i, j) * vv[i] * vv[j];
        a[k] = -quad;
    }
    TangentVector acc{a[0], a[1]};
    if (potential.kind != PotentialSpec::Kind::none) {
        const TangentVector grad_u =
            metric_at(params, s.q).solve(potential_differential(params, s.q, potential));
        acc += -grad_u;
    }
    acc += u;
    return acc;
}

JointState rk4_step(const RobotParams& params, const JointState& s, const ControlLaw& law,
                    const PotentialSpec& potential, double t, double dt) {
    if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be > 0");

    auto deriv = [&](const JointState& y, double stage_t) {
        // Guard the stage states too, or an overflowing run dies inside the
        // metric evaluation instead of reporting where the blowup happened.
        if (!y.finite())
            throw NonFiniteError(t + dt,
                                 "state left the finite range at t = " + std::to_string(t + dt));
        return JointState{{y.v.v1, y.v.v2}, forced_acceleration(params, y, law(y, stage_t), potential)};
    };
    auto advance = [](const JointState& y, double h, const JointState& k) {
        return JointState{{y.q.theta1 + h * k.q.theta1, y.q.theta2 + h * k.q.theta2},
                          {y.v.v1 + h * k.v.v1, y.v.v2 + h * k.v.v2}};
    };

    const JointState k1 = deriv(s, t);
    const JointState k2 = deriv(advance(s, 0.5 * dt, k1), t + 0.5 * dt);
    const JointState k3 = deriv(advance(s, 0.5 * dt, k2), t + 0.5 * dt);
    const JointState k4 = deriv(advance(s, dt, k3), t + dt);

    JointState out;
    const double w = dt / 6.0;
    out.q.theta1 = s.q.theta1 + w * (k1.q.theta1 + 2.0 * k2.q.theta1 + 2.0 * k3.q.theta1 + k4.q.theta1);
    out.q.theta2 = s.q.theta2 + w * (k1.q.theta2 + 2.0 * k2.q.theta2 + 2.0 * k3.q.theta2 + k4.q.theta2);
    out.v.v1 = s.v.v1 + w * (k1.v.v1 + 2.0 * k2.v.v1 + 2.0 * k3.v.v1 + k4.v.v1);
    out.v.v2 = s.v.v2 + w * (k1.v.v2 + 2.0 * k2.v.v2 + 2.0 * k3.v.v2 + k4.v.v2);
    if (!out.finite())
        throw NonFiniteError(t + dt, "state left the finite range at t = " + std::to_string(t + dt));
    return out;
}

namespace {

TrajectorySample make_sample(const RobotParams& params, const JointState& s, double t,
                             const ControlLaw& law, const PotentialSpec& potential,
                             const SampleAnnotator& annotate) {
    TrajectorySample sample;
    sample.t = t;
    sample.state = s;
    sample.tool = tool_position(params, s.q);
    sample.u = law(s, t);
    sample.energy.kinetic = kinetic_energy(params, s);
    sample.energy.potential = potential_energy(params, s.q, potential);
    sample.energy.total = sample.energy.kinetic + sample.energy.potential;
    sample.energy.power = metric_at(params, s.q).inner(sample.u, s.v);
    sample.sing_margin = singularity_margin(params, s.q);
    if (annotate) annotate(sample);
    return sample;
}

} // namespace

Trajectory integrate(const RobotParams& params, const JointState& initial, const ControlLaw& law,
                     const PotentialSpec& potential, double dt, double duration, int stride,
                     const SampleAnnotator& annotate) {
    if (!(dt > 0.0)) throw ValidationError("integrate: dt must be > 0");
    if (!(duration >= 0.0)) throw ValidationError("integrate: duration must be >= 0");
    if (stride < 1) throw ValidationError("integrate: stride must be >= 1");
    if (!initial.finite()) throw ValidationError("integrate: initial state is not finite");

    const long n_steps = static_cast<long>(std::floor(duration / dt + 1e-9));

    Trajectory traj;
    traj.samples.reserve(static_cast<std::size_t>(n_steps / stride) + 1);
    traj.samples.push_back(make_sample(params, initial, 0.0, law, potential, annotate));

    JointState s = initial;
    for (long step = 1; step <= n_steps; ++step) {
        const double t_prev = static_cast<double>(step - 1) * dt;
        s = rk4_step(params, s, law, potential, t_prev, dt);
        if (step % stride == 0)
            traj.samples.push_back(
                make_sample(params, s, static_cast<double>(step) * dt, law, potential, annotate));
    }
    return traj;
}

double energy_rate_residual(const Trajectory& traj) {
    if (traj.size() < 3)
        throw ValidationError("energy_rate_residual: need at least 3 samples");
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        const double dt2 = traj.samples[i + 1].t - traj.samples[i - 1].t;
        const double rate = (traj.samples[i + 1].energy.total - traj.samples[i - 1].energy.total) / dt2;
        worst = std::max(worst, std::abs(rate - traj.samples[i].energy.power));
    }
    return worst;
}

} // namespace twolink
