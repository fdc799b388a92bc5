#include "twolink/verify.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "twolink/control.hpp"
#include "twolink/dynamics.hpp"
#include "twolink/geometry.hpp"
#include "twolink/harness.hpp"
#include "twolink/kinematics.hpp"
#include "twolink/sweeps.hpp"

namespace twolink {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double x) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << x;
    return out.str();
}

/// Tangent vector with prescribed metric norm at q, direction from the rng.
TangentVector random_velocity(std::mt19937_64& rng, const RobotParams& params,
                              const ChartPoint& q, double target_norm) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    TangentVector v{gauss(rng), gauss(rng)};
    const double n = metric_at(params, q).norm(v);
    return (target_norm / n) * v;
}

struct Suite {
    std::vector<CheckResult> results;

    /// body returns (passed, detail); exceptions fail the check.
    template <typename Body>
    void check(const std::string& name, Body body) {
        CheckResult r;
        r.name = name;
        try {
            auto [passed, detail] = body();
            r.passed = passed;
            r.detail = detail;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
};

// --- metric and connection ---------------------------------------------

void verify_geometry(Suite& suite) {
    const RobotParams params = RobotParams::defaults();

    suite.check("metric positive definite over the chart", [&] {
        double min_det = 1e300;
        for (const ChartPoint& q : random_chart_points(1000, 11)) {
            const MetricTensor g = metric_at(params, q);
            if (!(g.g11 > 0.0) || !(g.det() > 0.0))
                return std::pair(false, "failed at (" + num(q.theta1) + ", " + num(q.theta2) + ")");
            min_det = std::min(min_det, g.det());
        }
        return std::pair(true, "min det " + num(min_det) + " over 1000 points");
    });

    suite.check("connection closed form matches finite-difference construction", [&] {
        const auto points = random_chart_points(1000, 12);
        const SweepStats stats = christoffel_mismatch_sweep(params, points, ExecMode::parallel);
        return std::pair(stats.max_abs_err <= 1e-8,
                         "max entry mismatch " + num(stats.max_abs_err) + " (bound 1e-8)");
    });

    suite.check("connection symmetric in the lower indices", [&] {
        const MetricFn metric_fn = [&](const ChartPoint& q) { return metric_at(params, q); };
        double worst = 0.0;
        for (const ChartPoint& q : random_chart_points(100, 13)) {
            const Christoffel c = christoffel_oracle(metric_fn, q);
            for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(c(k, 0, 1) - c(k, 1, 0)));
        }
        return std::pair(worst <= 1e-15, "max asymmetry " + num(worst));
    });

    suite.check("covariant derivative compatible with the metric", [&] {
        std::mt19937_64 rng(14);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        std::uniform_real_distribution<double> coeff(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const ChartPoint q{angle(rng), angle(rng)};
            const TangentVector v = random_velocity(rng, params, q, 1.0);
            const double a1 = coeff(rng), b1 = coeff(rng), c1 = coeff(rng);
            const double a2 = coeff(rng), b2 = coeff(rng), c2 = coeff(rng);
            const VectorField field = [=](const ChartPoint& p) {
                return TangentVector{c1 + a1 * std::sin(p.theta1 + b1 * p.theta2),
                                     c2 + a2 * std::cos(p.theta2 + b2 * p.theta1)};
            };
            const double h = 1e-5;
            auto squared_norm_at = [&](double t) {
                const ChartPoint p{q.theta1 + t * v.v1, q.theta2 + t * v.v2};
                return metric_at(params, p).quad(field(p));
            };
            const double lhs = (squared_norm_at(h) - squared_norm_at(-h)) / (2.0 * h);
            const TangentVector dfield = covariant_derivative_along(field, q, v, params);
            const double rhs = 2.0 * metric_at(params, q).inner(dfield, field(q));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        return std::pair(worst <= 1e-6, "max |d/dt g(X,X) - 2 g(DX/Dt, X)| = " + num(worst));
    });

    suite.check("index raise and lower are mutually inverse", [&] {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        std::uniform_real_distribution<double> comp(-2.0, 2.0);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const MetricTensor g = metric_at(params, {angle(rng), angle(rng)});
            const Covector p{comp(rng), comp(rng)};
            const Covector back = g.flat(g.solve(p));
            worst = std::max(worst, std::max(std::abs(back.p1 - p.p1), std::abs(back.p2 - p.p2)));
        }
        return std::pair(worst <= 1e-12, "max round-trip error " + num(worst));
    });
}

// --- tool map -----------------------------------------------------------

void verify_kinematics(Suite& suite) {
    const RobotParams params = RobotParams::defaults();

    suite.check("tool map and jacobian 2 pi periodic", [&] {
        double worst = 0.0;
        for (const ChartPoint& q : random_chart_points(200, 21)) {
            for (int axis = 0; axis < 2; ++axis) {
                const ChartPoint shifted = q.shifted(axis, 2.0 * kPi);
                const ToolPoint d = tool_position(params, q) - tool_position(params, shifted);
                worst = std::max({worst, std::abs(d.x), std::abs(d.y)});
                const ToolJacobian ja = tool_jacobian(params, q);
                const ToolJacobian jb = tool_jacobian(params, shifted);
                worst = std::max({worst, std::abs(ja.a11 - jb.a11), std::abs(ja.a12 - jb.a12),
                                  std::abs(ja.a21 - jb.a21), std::abs(ja.a22 - jb.a22)});
            }
        }
        return std::pair(worst <= 1e-12, "max shift discrepancy " + num(worst));
    });

    suite.check("jacobian determinant equals its closed form", [&] {
        const auto points = random_chart_points(1000, 22);
        const SweepStats stats = det_identity_sweep(params, points, ExecMode::parallel);
        return std::pair(stats.max_abs_err <= 1e-12,
                         "max relative error " + num(stats.max_abs_err));
    });

    suite.check("tool never leaves the workspace annulus", [&] {
        for (const ChartPoint& q : random_chart_points(1000, 23))
            if (workspace_contains(params, tool_position(params, q)) == WorkspaceLocation::outside)
                return std::pair(false, "outside at (" + num(q.theta1) + ", " + num(q.theta2) + ")");
        return std::pair(true, std::string("1000 random configurations classified inside or boundary"));
    });

    suite.check("singularity margin vanishes exactly on the singular set", [&] {
        std::mt19937_64 rng(24);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        double worst_on = 0.0, best_off = 1e300;
        for (int trial = 0; trial < 100; ++trial) {
            const double t = angle(rng);
            worst_on = std::max(worst_on, singularity_margin(params, {t, t}));
            worst_on = std::max(worst_on, singularity_margin(params, {t, t + kPi}));
            const double off = 0.01 + 0.98 * std::abs(angle(rng)) / kPi * (kPi - 0.02);
            best_off = std::min(best_off, singularity_margin(params, {t, t + off}));
        }
        const double floor = params.l1 * params.l2 * std::sin(0.01) * 0.99;
        const bool ok = worst_on <= 1e-15 && best_off >= floor;
        return std::pair(ok, "margin <= " + num(worst_on) + " on the set, >= " + num(best_off) +
                                 " at separation >= 0.01 rad");
    });
}

// --- integration --------------------------------------------------------

const ControlLaw kFreeLaw = [](const JointState&, double) { return TangentVector{0.0, 0.0}; };

JointState scenario_initial_state(const Scenario& sc) {
    if (!sc.project_initial) return sc.initial;
    return init_on_constraint(sc.params, sc.initial.q, sc.initial.v, *sc.constraint);
}

/// RK4 on the state extended with the control's work integral, so the work
/// oracle carries the integrator's own accuracy instead of a quadrature's.
double co_integrated_work(const RobotParams& params, JointState s, const ControlLaw& law,
                          double dt, double duration) {
    struct Rate {
        TangentVector dq, dv;
        double dw;
    };
    auto rate = [&](const JointState& y, double t) {
        const TangentVector u = law(y, t);
        return Rate{y.v, forced_acceleration(params, y, u, PotentialSpec::none()),
                    metric_at(params, y.q).inner(u, y.v)};
    };
    auto advance = [](const JointState& y, double h, const Rate& r) {
        return JointState{{y.q.theta1 + h * r.dq.v1, y.q.theta2 + h * r.dq.v2},
                          {y.v.v1 + h * r.dv.v1, y.v.v2 + h * r.dv.v2}};
    };
    double work = 0.0;
    const long n = static_cast<long>(std::floor(duration / dt + 1e-9));
    for (long step = 0; step < n; ++step) {
        const double t = static_cast<double>(step) * dt;
        const Rate r1 = rate(s, t);
        const Rate r2 = rate(advance(s, 0.5 * dt, r1), t + 0.5 * dt);
        const Rate r3 = rate(advance(s, 0.5 * dt, r2), t + 0.5 * dt);
        const Rate r4 = rate(advance(s, dt, r3), t + dt);
        const double w = dt / 6.0;
        s.q.theta1 += w * (r1.dq.v1 + 2.0 * r2.dq.v1 + 2.0 * r3.dq.v1 + r4.dq.v1);
        s.q.theta2 += w * (r1.dq.v2 + 2.0 * r2.dq.v2 + 2.0 * r3.dq.v2 + r4.dq.v2);
        s.v.v1 += w * (r1.dv.v1 + 2.0 * r2.dv.v1 + 2.0 * r3.dv.v1 + r4.dv.v1);
        s.v.v2 += w * (r1.dv.v2 + 2.0 * r2.dv.v2 + 2.0 * r3.dv.v2 + r4.dv.v2);
        work += w * (r1.dw + 2.0 * r2.dw + 2.0 * r3.dw + r4.dw);
    }
    return work;
}

void verify_dynamics(Suite& suite) {
    const RobotParams params = RobotParams::defaults();

    suite.check("free motion conserves total energy", [&] {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        std::uniform_real_distribution<double> speed(0.5, 2.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const ChartPoint q{angle(rng), angle(rng)};
            const JointState s0{q, random_velocity(rng, params, q, speed(rng))};
            const Trajectory traj =
                integrate(params, s0, kFreeLaw, PotentialSpec::none(), 1e-3, 10.0, 10);
            const double e0 = traj.front().energy.total;
            for (const TrajectorySample& s : traj.samples)
                worst = std::max(worst, std::abs(s.energy.total - e0) / e0);
        }
        return std::pair(worst <= 1e-6, "max relative drift " + num(worst) + " over 20 runs");
    });

    suite.check("free motion energy rate stays at zero", [&] {
        std::mt19937_64 rng(32);
        const ChartPoint q{0.4, -0.9};
        const JointState s0{q, random_velocity(rng, params, q, 1.5)};
        const Trajectory traj =
            integrate(params, s0, kFreeLaw, PotentialSpec::none(), 1e-3, 10.0, 1);
        const double residual = energy_rate_residual(traj);
        return std::pair(residual <= 1e-6, "max |dE/dt - fed power| = " + num(residual));
    });

    suite.check("friction converts energy at rate k |v|^2", [&] {
        const double k = 0.5;
        const ControlLaw friction = [k](const JointState& s, double) { return (-k) * s.v; };
        std::mt19937_64 rng(33);
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            std::uniform_real_distribution<double> angle(-kPi, kPi);
            const ChartPoint q{angle(rng), angle(rng)};
            const JointState s0{q, random_velocity(rng, params, q, 1.0)};
            const Trajectory traj =
                integrate(params, s0, friction, PotentialSpec::none(), 1e-3, 10.0, 1);
            for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
                const double rate = (traj.samples[i + 1].energy.total -
                                     traj.samples[i - 1].energy.total) /
                                    (traj.samples[i + 1].t - traj.samples[i - 1].t);
                const double dissipation =
                    k * metric_at(params, traj.samples[i].state.q).quad(traj.samples[i].state.v);
                worst = std::max(worst, std::abs(rate + dissipation));
            }
        }
        return std::pair(worst <= 1e-5, "max |dE/dt + k|v|^2| = " + num(worst));
    });

    suite.check("integrator converges at fourth order", [&] {
        const JointState s0{{0.3, -0.2}, {1.0, 0.6}};
        const double duration = 1.0;
        auto final_state = [&](double dt) {
            const Trajectory traj =
                integrate(params, s0, kFreeLaw, PotentialSpec::none(), dt, duration,
                          std::max(1, static_cast<int>(std::llround(duration / dt))));
            return traj.back().state;
        };
        // reference at dt_min / 100; the ladder stays well above the
        // round-off floor of the step errors
        const JointState ref = final_state(1.25e-5);
        auto err = [&](double dt) {
            const JointState s = final_state(dt);
            return std::max({std::abs(s.q.theta1 - ref.q.theta1), std::abs(s.q.theta2 - ref.q.theta2),
                             std::abs(s.v.v1 - ref.v.v1), std::abs(s.v.v2 - ref.v.v2)});
        };
        const double dts[] = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
        double lo = 1e300, hi = -1e300;
        std::string detail = "orders";
        double prev = err(dts[0]);
        for (int i = 1; i < 4; ++i) {
            const double cur = err(dts[i]);
            const double order = std::log2(prev / cur);
            lo = std::min(lo, order);
            hi = std::max(hi, order);
            detail += " " + num(order);
            prev = cur;
        }
        return std::pair(lo >= 3.7 && hi <= 4.3, detail);
    });

    suite.check("free motion is time reversible", [&] {
        const JointState s0{{0.7, -0.4}, {0.9, -1.1}};
        Trajectory fwd = integrate(params, s0, kFreeLaw, PotentialSpec::none(), 1e-3, 5.0, 5000);
        JointState turn = fwd.back().state;
        turn.v = -turn.v;
        Trajectory bwd = integrate(params, turn, kFreeLaw, PotentialSpec::none(), 1e-3, 5.0, 5000);
        const JointState end = bwd.back().state;
        const double worst =
            std::max({std::abs(end.q.theta1 - s0.q.theta1), std::abs(end.q.theta2 - s0.q.theta2),
                      std::abs(end.v.v1 + s0.v.v1), std::abs(end.v.v2 + s0.v.v2)});
        return std::pair(worst <= 1e-6, "max return error " + num(worst));
    });

    suite.check("built-in runs balance energy against co-integrated work", [&] {
        double worst = 0.0;
        for (const std::string& name : Scenario::builtin_names()) {
            const Scenario sc = Scenario::builtin(name);
            const JointState s0 = scenario_initial_state(sc);
            const ControlLaw law = make_control_law(sc);
            const Trajectory traj =
                integrate(sc.params, s0, law, sc.potential, sc.dt, sc.duration, sc.stride);
            const double work = co_integrated_work(sc.params, s0, law, sc.dt, sc.duration);
            const double gap = std::abs(traj.back().energy.total - traj.front().energy.total - work);
            worst = std::max(worst, gap);
        }
        return std::pair(worst <= 5e-6, "max |E(T) - E(0) - W(T)| = " + num(worst));
    });
}

// --- feedback laws ------------------------------------------------------

void verify_control(Suite& suite) {
    const RobotParams params = RobotParams::defaults();
    const ConstraintSpec ellipse = ConstraintSpec::ellipse(0.3, 0.6);
    const ChartPoint on_curve_guess{kPi / 2.0, kPi / 2.0 - 0.5};

    suite.check("tool regulator reaches the first built-in reference", [&] {
        const RunResult result = run(Scenario::builtin("paper-sim-1"));
        const bool ok = *result.metrics.final_tool_error < 1e-3 && result.metrics.final_speed < 1e-3;
        return std::pair(ok, "tool error " + num(*result.metrics.final_tool_error) + ", speed " +
                                 num(result.metrics.final_speed));
    });

    suite.check("anti-aligned reference freezes the straightened rest state", [&] {
        // paper-sim-2 starts at the straightened singular configuration with
        // the reference directly behind the tool: the position error is
        // orthogonal to the tool map's range, so the pulled-back gradient is
        // exactly zero and the zero state is a rest point of the closed loop.
        // The integrator must hold it bitwise; convergence is impossible here.
        const Scenario sc = Scenario::builtin("paper-sim-2");
        const TangentVector gv = grad_lasalle(sc.params, sc.initial.q, *sc.x_d, sc.gains.k1);
        if (gv.v1 != 0.0 || gv.v2 != 0.0)
            return std::pair(false, std::string("gradient not exactly zero at the rest state"));
        const RunResult result = run(sc);
        const TrajectorySample& last = result.trajectory.back();
        const bool frozen = last.state.q.theta1 == sc.initial.q.theta1 &&
                            last.state.q.theta2 == sc.initial.q.theta2 &&
                            last.state.v.v1 == 0.0 && last.state.v.v2 == 0.0;
        return std::pair(frozen, "tool error pinned at " + num(*result.metrics.final_tool_error));
    });

    suite.check("regulated energy never increases on the built-in runs", [&] {
        double worst = -1e300;
        for (const std::string name : {"paper-sim-1", "paper-sim-2"}) {
            const Scenario sc = Scenario::builtin(name);
            const Trajectory traj = simulate(sc);
            double prev = 1e300;
            for (const TrajectorySample& s : traj.samples) {
                const double lyapunov =
                    s.energy.kinetic + lasalle_potential(sc.params, s.state.q, *sc.x_d, sc.gains.k1);
                worst = std::max(worst, lyapunov - prev);
                prev = lyapunov;
            }
        }
        return std::pair(worst <= 1e-6, "max per-sample increase " + num(worst));
    });

    suite.check("regulated energy rate identity on a smooth run", [&] {
        // gentle gains keep the finite-difference truncation below the bound
        const Gains gains{1.0, 0.5, 1e-28, 1e-28};
        const ToolPoint x_d{0.0, 0.6};
        const ControlLaw law = [&](const JointState& s, double) {
            return tool_regulator(params, s, x_d, gains, PotentialSpec::none()).u;
        };
        const JointState s0{{0.9, 1.9}, {0.0, 0.0}};
        const Trajectory traj = integrate(params, s0, law, PotentialSpec::none(), 1e-3, 10.0, 1);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
            auto lyapunov = [&](const TrajectorySample& s) {
                return s.energy.kinetic + lasalle_potential(params, s.state.q, x_d, gains.k1);
            };
            const double rate = (lyapunov(traj.samples[i + 1]) - lyapunov(traj.samples[i - 1])) /
                                (traj.samples[i + 1].t - traj.samples[i - 1].t);
            const double dissipation = gains.k * metric_at(params, traj.samples[i].state.q)
                                                     .quad(traj.samples[i].state.v);
            worst = std::max(worst, std::abs(rate + dissipation));
        }
        return std::pair(worst <= 1e-5, "max |d/dt(E+V) + k|v|^2| = " + num(worst));
    });

    suite.check("regulator gradient vanishes exactly at the reference", [&] {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        double worst_at_target = 0.0, weakest_off_target = 1e300;
        int accepted = 0;
        while (accepted < 100) {
            const ChartPoint q{angle(rng), angle(rng)};
            if (singularity_margin(params, q) < 0.05) continue;
            ++accepted;
            const ToolPoint at = tool_position(params, q);
            const TangentVector g0 = grad_lasalle(params, q, at, 200.0);
            worst_at_target = std::max({worst_at_target, std::abs(g0.v1), std::abs(g0.v2)});
            const ToolPoint off{at.x + 0.05, at.y};
            weakest_off_target = std::min(
                weakest_off_target, metric_at(params, q).norm(grad_lasalle(params, q, off, 200.0)));
        }
        const bool ok = worst_at_target <= 1e-15 && weakest_off_target > 1e-8;
        return std::pair(ok, "at target <= " + num(worst_at_target) + ", 5 cm off >= " +
                                 num(weakest_off_target));
    });

    suite.check("singular configurations hide tool error from the regulator", [&] {
        // straightened arm pointing at +y, reference on the same ray: the
        // error is invisible to every joint motion, the gradient vanishes
        const ChartPoint q{kPi / 2.0, kPi / 2.0};
        const ToolPoint x_d{0.0, 0.6};
        const double potential = lasalle_potential(params, q, x_d, 200.0);
        const TangentVector grad = grad_lasalle(params, q, x_d, 200.0);
        const double norm = metric_at(params, q).norm(grad);
        const bool ok = potential > 1.0 && norm <= 1e-12;
        return std::pair(ok, "potential " + num(potential) + " yet |grad| = " + num(norm));
    });

    suite.check("initialization lands exactly on the constraint", [&] {
        std::mt19937_64 rng(42);
        int steps = 0;
        const TangentVector v_guess = random_velocity(rng, params, on_curve_guess, 0.7);
        const JointState s = init_on_constraint(params, on_curve_guess, v_guess, ellipse, &steps);
        const double residual = std::abs(psi(params, s.q, ellipse));
        const double tangency =
            std::abs(metric_at(params, s.q).inner(s.v, grad_psi(params, s.q, ellipse)));
        const bool ok = residual <= 1e-12 && tangency <= 1e-12 && steps <= 10;
        return std::pair(ok, "|psi| " + num(residual) + ", |g(v, grad psi)| " + num(tangency) +
                                 ", " + std::to_string(steps) + " Newton steps");
    });

    suite.check("normal force alone keeps the motion on the constraint", [&] {
        std::mt19937_64 rng(43);
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            const TangentVector v_guess = random_velocity(rng, params, on_curve_guess, 0.3 + 0.2 * trial);
            const JointState s0 = init_on_constraint(params, on_curve_guess, v_guess, ellipse);
            const ControlLaw law = [&](const JointState& s, double) {
                return lambda_normal(params, s, ellipse, 1e-28) * grad_psi(params, s.q, ellipse);
            };
            const SampleAnnotator note = [&](TrajectorySample& sample) {
                sample.psi = psi(params, sample.state.q, ellipse);
            };
            const Trajectory traj =
                integrate(params, s0, law, PotentialSpec::none(), 1e-3, 10.0, 1, note);
            for (const TrajectorySample& s : traj.samples)
                worst = std::max(worst, std::abs(*s.psi));
        }
        return std::pair(worst <= 1e-6, "max |psi| " + num(worst) + " over 3 runs of 10 s");
    });

    suite.check("tangential forcing cannot push the motion off the constraint", [&] {
        const JointState s0 = init_on_constraint(params, on_curve_guess, {0.5, -0.2}, ellipse);
        const ControlLaw law = [&](const JointState& s, double t) {
            const TangentVector wander{0.5 * std::sin(2.0 * t), 0.5 * std::cos(3.0 * t)};
            return lambda_normal(params, s, ellipse, 1e-28) * grad_psi(params, s.q, ellipse) +
                   project_tangent(params, s.q, wander, ellipse, 0.0);
        };
        const SampleAnnotator note = [&](TrajectorySample& sample) {
            sample.psi = psi(params, sample.state.q, ellipse);
        };
        const Trajectory traj = integrate(params, s0, law, PotentialSpec::none(), 1e-3, 10.0, 1, note);
        double worst = 0.0;
        for (const TrajectorySample& s : traj.samples) worst = std::max(worst, std::abs(*s.psi));
        return std::pair(worst <= 1e-6, "max |psi| " + num(worst) + " under tangential forcing");
    });

    suite.check("scaled normal force loses the constraint 10x faster", [&] {
        const JointState s0 = init_on_constraint(params, on_curve_guess, {0.4, -0.3}, ellipse);
        auto max_psi_with_scale = [&](double scale) {
            const ControlLaw law = [&, scale](const JointState& s, double) {
                return scale * lambda_normal(params, s, ellipse, 1e-28) *
                       grad_psi(params, s.q, ellipse);
            };
            const SampleAnnotator note = [&](TrajectorySample& sample) {
                sample.psi = psi(params, sample.state.q, ellipse);
            };
            const Trajectory traj =
                integrate(params, s0, law, PotentialSpec::none(), 1e-3, 10.0, 1, note);
            double worst = 0.0;
            for (const TrajectorySample& s : traj.samples) worst = std::max(worst, std::abs(*s.psi));
            return worst;
        };
        const double nominal = max_psi_with_scale(1.0);
        const double perturbed = max_psi_with_scale(1.0 + 1e-3);
        const bool ok = perturbed >= 10.0 * std::max(nominal, 1e-300);
        return std::pair(ok, "nominal " + num(nominal) + ", perturbed " + num(perturbed));
    });

    suite.check("constrained control recomposes from its parts", [&] {
        std::mt19937_64 rng(44);
        std::uniform_real_distribution<double> along(0.0, 2.0 * kPi);
        const Gains gains{40.0, 30.0, 1e-28, 1e-28};
        const ToolPoint x_d{0.0, 0.3};
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const ChartPoint guess{on_curve_guess.theta1 + 0.2 * std::sin(along(rng)),
                                   on_curve_guess.theta2 + 0.2 * std::cos(along(rng))};
            const JointState s = init_on_constraint(params, guess,
                                                    random_velocity(rng, params, guess, 1.0), ellipse);
            const ControlOutput out = constrained_regulator(params, s, x_d, gains, ellipse);
            const TangentVector rebuilt = *out.lambda * grad_psi(params, s.q, ellipse) +
                                          *out.tangential_component;
            worst = std::max({worst, std::abs(rebuilt.v1 - out.u.v1), std::abs(rebuilt.v2 - out.u.v2)});
        }
        return std::pair(worst <= 1e-12, "max recomposition gap " + num(worst));
    });

    suite.check("tangential projection is orthogonal and idempotent", [&] {
        std::mt19937_64 rng(45);
        std::uniform_real_distribution<double> comp(-2.0, 2.0);
        double worst_angle = 0.0, worst_repeat = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const JointState s = init_on_constraint(
                params, {on_curve_guess.theta1 + comp(rng) * 0.1, on_curve_guess.theta2 + comp(rng) * 0.1},
                {0.0, 0.0}, ellipse);
            const MetricTensor g = metric_at(params, s.q);
            const TangentVector grad = grad_psi(params, s.q, ellipse);
            const TangentVector w{comp(rng), comp(rng)};
            const TangentVector par = project_tangent(params, s.q, w, ellipse, 0.0);
            const double denom = std::max(g.norm(par) * g.norm(grad), 1e-300);
            worst_angle = std::max(worst_angle, std::abs(g.inner(par, grad)) / denom);
            const TangentVector twice = project_tangent(params, s.q, par, ellipse, 0.0);
            worst_repeat = std::max({worst_repeat, std::abs(twice.v1 - par.v1), std::abs(twice.v2 - par.v2)});
        }
        const bool ok = worst_angle <= 1e-10 && worst_repeat <= 1e-12;
        return std::pair(ok, "cos angle <= " + num(worst_angle) + ", repeat gap <= " + num(worst_repeat));
    });

    suite.check("rest points of the constrained run sit at the reachable minima", [&] {
        const Scenario sc = Scenario::builtin("paper-constrained");
        const auto critical = scan_constraint_critical_points(*sc.constraint, *sc.x_d);
        int minima = 0;
        double best_error = 1e300;
        for (const ConstraintCriticalPoint& cp : critical)
            if (cp.is_minimum) {
                ++minima;
                best_error = std::min(best_error, cp.tool_error);
            }
        const RunResult result = run(sc);
        const double reached = *result.metrics.final_tool_error;
        const bool ok = minima > 0 && std::abs(reached - best_error) <= 1e-3 &&
                        *result.metrics.max_psi <= 1e-4;
        return std::pair(ok, std::to_string(minima) + " minima, closest at " + num(best_error) +
                                 "; run settled at " + num(reached) + ", max |psi| " +
                                 num(*result.metrics.max_psi));
    });
}

// --- harness ------------------------------------------------------------

void verify_harness(Suite& suite) {
    suite.check("identical scenarios export identical bytes", [&] {
        const Scenario sc = Scenario::builtin("paper-sim-1");
        const RunResult a = run(sc);
        const RunResult b = run(sc);
        const bool csv_same = export_csv(a.trajectory) == export_csv(b.trajectory);
        const bool json_same = export_json(a.trajectory, a.metrics) == export_json(b.trajectory, b.metrics);
        return std::pair(csv_same && json_same, csv_same && json_same ? "csv and json identical"
                                                                      : "exports differ");
    });

    suite.check("json export round-trips bit exactly", [&] {
        Scenario sc = Scenario::builtin("paper-constrained");
        sc.duration = 1.0;
        const RunResult result = run(sc);
        const Trajectory back = import_json(export_json(result.trajectory, result.metrics));
        if (back.size() != result.trajectory.size())
            return std::pair(false, std::string("sample count changed"));
        for (std::size_t i = 0; i < back.size(); ++i) {
            const TrajectorySample& x = result.trajectory.samples[i];
            const TrajectorySample& y = back.samples[i];
            const bool same = x.t == y.t && x.state.q.theta1 == y.state.q.theta1 &&
                              x.state.q.theta2 == y.state.q.theta2 && x.state.v.v1 == y.state.v.v1 &&
                              x.state.v.v2 == y.state.v.v2 && x.tool.x == y.tool.x &&
                              x.tool.y == y.tool.y && x.u.v1 == y.u.v1 && x.u.v2 == y.u.v2 &&
                              x.lambda == y.lambda && x.psi == y.psi &&
                              x.energy.total == y.energy.total && x.energy.power == y.energy.power &&
                              x.sing_margin == y.sing_margin;
            if (!same) return std::pair(false, "mismatch at sample " + std::to_string(i));
        }
        return std::pair(true, std::to_string(back.size()) + " samples reproduced bitwise");
    });

    suite.check("scenario validation names the offending field", [&] {
        const char* bad_dt = "controller = free\ndt = -1\n";
        try {
            load_scenario(bad_dt);
            return std::pair(false, std::string("negative dt accepted"));
        } catch (const ValidationError& e) {
            if (std::string(e.what()).find("dt") == std::string::npos)
                return std::pair(false, std::string("message lacks field name: ") + e.what());
        }
        try {
            load_scenario("controller = free\nnonsense = 1\n");
            return std::pair(false, std::string("unknown key accepted"));
        } catch (const ParseError&) {
        }
        return std::pair(true, std::string("bad documents rejected with named fields"));
    });

    suite.check("parallel sweeps match the serial reference bitwise", [&] {
        const RobotParams params = RobotParams::defaults();
        const auto points = random_chart_points(500, 51);
        const SweepStats serial = christoffel_mismatch_sweep(params, points, ExecMode::serial);
        const SweepStats parallel = christoffel_mismatch_sweep(params, points, ExecMode::parallel);
        if (serial.max_abs_err != parallel.max_abs_err || serial.worst_index != parallel.worst_index)
            return std::pair(false, "connection sweep diverged");
        const MarginGrid a = margin_raster(params, 101, ExecMode::serial);
        const MarginGrid b = margin_raster(params, 101, ExecMode::parallel);
        if (a.values != b.values) return std::pair(false, "margin raster diverged");
        return std::pair(true, "connection sweep and margin raster identical");
    });
}

} // namespace

std::vector<CheckResult> run_verification() {
    Suite suite;
    verify_geometry(suite);
    verify_kinematics(suite);
    verify_dynamics(suite);
    verify_control(suite);
    verify_harness(suite);
    return std::move(suite.results);
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        if (!r.passed) return false;
    return true;
}

} // namespace twolink
