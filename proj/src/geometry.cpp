#include "twolink/geometry.hpp"

#include <cmath>
#include <numbers>

namespace twolink {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

RobotParams RobotParams::defaults() {
    RobotParams p;
    p.m1 = 1.0;
    p.m2 = 1.0;
    p.l1 = 0.4;
    p.l2 = 0.4;
    p.J1 = p.m1 * p.l1 * p.l1 / 12.0;
    p.J2 = p.m2 * p.l2 * p.l2 / 12.0;
    return p;
}

void RobotParams::validate() const {
    auto need_positive = [](double value, const char* name) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw ValidationError(std::string("RobotParams: ") + name + " must be > 0 and finite");
    };
    need_positive(m1, "m1");
    need_positive(m2, "m2");
    need_positive(l1, "l1");
    need_positive(l2, "l2");
    need_positive(J1, "J1");
    need_positive(J2, "J2");
}

double wrap_angle(double theta) {
    double w = std::remainder(theta, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

ChartPoint ChartPoint::wrap() const { return {wrap_angle(theta1), wrap_angle(theta2)}; }

ChartPoint ChartPoint::shifted(int axis, double h) const {
    return axis == 0 ? ChartPoint{theta1 + h, theta2} : ChartPoint{theta1, theta2 + h};
}

double MetricTensor::operator()(int a, int b) const {
    if (a == 0 && b == 0) return g11;
    if (a == 1 && b == 1) return g22;
    return g12;
}

double MetricTensor::norm(const TangentVector& v) const {
    double q = quad(v);
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

TangentVector MetricTensor::solve(const Covector& p) const {
    double d = det();
    if (!(d > 0.0) || !(g11 > 0.0))
        throw DegenerateMetricError("metric not positive definite (det = " + std::to_string(d) + ")");
    return {(g22 * p.p1 - g12 * p.p2) / d, (-g12 * p.p1 + g11 * p.p2) / d};
}

MetricTensor metric_at(const RobotParams& params, const ChartPoint& q) {
    MetricTensor g;
    g.g11 = params.J1 + 0.25 * (params.m1 + 4.0 * params.m2) * params.l1 * params.l1;
    g.g22 = params.J2 + 0.25 * params.m2 * params.l2 * params.l2;
    g.g12 = 0.5 * params.m2 * params.l1 * params.l2 * std::cos(q.theta1 - q.theta2);
    return g;
}

Christoffel christoffel_closed_form(const RobotParams& params, const ChartPoint& q) {
    const MetricTensor g = metric_at(params, q);
    const double det = g.det();
    if (!(det > 0.0))
        throw DegenerateMetricError("christoffel_closed_form: det G <= 0");

    const double delta = q.theta1 - q.theta2;
    const double s = std::sin(delta);
    const double s2 = std::sin(2.0 * delta);
    const double m2 = params.m2, l1 = params.l1, l2 = params.l2;
    const double denom = 8.0 * det;

    Christoffel c;
    c.at(0, 0, 0) = m2 * m2 * l1 * l1 * l2 * l2 * s2 / denom;
    c.at(0, 1, 1) = m2 * l1 * l2 * (4.0 * params.J2 + m2 * l2 * l2) * s / denom;
    c.at(1, 0, 0) = -m2 * l1 * l2 * (4.0 * params.J1 + (params.m1 + 4.0 * m2) * l1 * l1) * s / denom;
    c.at(1, 1, 1) = -m2 * m2 * l1 * l1 * l2 * l2 * s2 / denom;
    // mixed lower indices stay zero for this metric
    return c;
}

Christoffel christoffel_oracle(const MetricFn& metric_fn, const ChartPoint& q, double h) {
    if (!(h > 0.0)) throw ValidationError("christoffel_oracle: h must be > 0");

    const MetricTensor g = metric_fn(q);
    if (!(g.det() > 0.0) || !(g.g11 > 0.0))
        throw DegenerateMetricError("christoffel_oracle: metric degenerate at evaluation point");

    // dg[l](a,b) = d g_ab / d theta_l by central differences
    std::array<std::array<std::array<double, 2>, 2>, 2> dg{};
    for (int l = 0; l < 2; ++l) {
        const MetricTensor gp = metric_fn(q.shifted(l, h));
        const MetricTensor gm = metric_fn(q.shifted(l, -h));
        if (!(gp.det() > 0.0) || !(gm.det() > 0.0))
            throw DegenerateMetricError("christoffel_oracle: metric degenerate on stencil");
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                dg[l][a][b] = (gp(a, b) - gm(a, b)) / (2.0 * h);
    }

    const double det = g.det();
    const double ginv[2][2] = {{g.g22 / det, -g.g12 / det}, {-g.g12 / det, g.g11 / det}};

    Christoffel c;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double sum = 0.0;
                for (int l = 0; l < 2; ++l)
                    sum += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                c.at(k, i, j) = 0.5 * sum;
            }
    return c;
}

TangentVector sharp(const MetricTensor& g, const Covector& p) { return g.solve(p); }

TangentVector gradient(const MetricTensor& g, const Covector& dV) { return g.solve(dV); }

TangentVector covariant_derivative_along(const VectorField& field, const ChartPoint& q,
                                         const TangentVector& v, const ChristoffelFn& gamma_at,
                                         double h) {
    if (!(h > 0.0)) throw ValidationError("covariant_derivative_along: h must be > 0");

    const TangentVector x = field(q);
    TangentVector dx[2];  // dx[i] = dX/dtheta_i
    for (int i = 0; i < 2; ++i) {
        const TangentVector xp = field(q.shifted(i, h));
        const TangentVector xm = field(q.shifted(i, -h));
        dx[i] = (1.0 / (2.0 * h)) * (xp - xm);
    }

    const Christoffel gamma = gamma_at(q);
    const double vv[2] = {v.v1, v.v2};
    const double xx[2] = {x.v1, x.v2};
    double out[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
        const double dxk[2] = {k == 0 ? dx[0].v1 : dx[0].v2, k == 0 ? dx[1].v1 : dx[1].v2};
        for (int i = 0; i < 2; ++i) {
            out[k] += dxk[i] * vv[i];
            for (int j = 0; j < 2; ++j) out[k] += vv[i] * gamma(k, i, j) * xx[j];
        }
    }
    return {out[0], out[1]};
}

TangentVector covariant_derivative_along(const VectorField& field, const ChartPoint& q,
                                         const TangentVector& v, const RobotParams& params,
                                         double h) {
    return covariant_derivative_along(
        field, q, v, [&params](const ChartPoint& p) { return christoffel_closed_form(params, p); },
        h);
}

} // namespace twolink
