#pragma once
#include <array>
#include <functional>

#include "twolink/errors.hpp"

namespace twolink {

/// Physical constants of the two links. Lengths in m, masses in kg,
/// moments of inertia (about each link's center of mass) in kg m^2.
struct RobotParams {
    double m1, m2;
    double l1, l2;
    double J1, J2;

    /// Uniform rods of 1 kg and 0.4 m, J = m l^2 / 12.
    static RobotParams defaults();

    /// Throws ValidationError unless all six constants are strictly positive.
    void validate() const;
};

/// Configuration in the (theta1, theta2) chart of the torus. Angles are kept
/// unwrapped on the whole real line; wrap() reduces each to (-pi, pi] for
/// reporting.
struct ChartPoint {
    double theta1 = 0.0;
    double theta2 = 0.0;

    ChartPoint wrap() const;

    /// Chart point shifted by h along coordinate axis (0 or 1).
    ChartPoint shifted(int axis, double h) const;
};

/// Reduce one angle to (-pi, pi].
double wrap_angle(double theta);

/// Velocity components in the coordinate basis at some chart point (rad/s).
struct TangentVector {
    double v1 = 0.0;
    double v2 = 0.0;

    TangentVector operator+(const TangentVector& o) const { return {v1 + o.v1, v2 + o.v2}; }
    TangentVector operator-(const TangentVector& o) const { return {v1 - o.v1, v2 - o.v2}; }
    TangentVector operator-() const { return {-v1, -v2}; }
    TangentVector& operator+=(const TangentVector& o) { v1 += o.v1; v2 += o.v2; return *this; }
};
inline TangentVector operator*(double a, const TangentVector& v) { return {a * v.v1, a * v.v2}; }

/// Components in the coordinate cobasis (N m). This is what a joint torque
/// really is; the sharp operator turns it into a TangentVector.
struct Covector {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Duality pairing <p, v> = p1 v1 + p2 v2.
inline double pairing(const Covector& p, const TangentVector& v) {
    return p.p1 * v.v1 + p.p2 * v.v2;
}

/// Kinetic-energy metric at one chart point, 2x2 symmetric (only g12 stored
/// once). Positive definite for every valid RobotParams.
struct MetricTensor {
    double g11, g12, g22;

    double det() const { return g11 * g22 - g12 * g12; }

    double operator()(int a, int b) const;

    /// Quadratic form v^T G v.
    double quad(const TangentVector& v) const {
        return g11 * v.v1 * v.v1 + 2.0 * g12 * v.v1 * v.v2 + g22 * v.v2 * v.v2;
    }

    /// Inner product g(v, w).
    double inner(const TangentVector& v, const TangentVector& w) const {
        return g11 * v.v1 * w.v1 + g12 * (v.v1 * w.v2 + v.v2 * w.v1) + g22 * v.v2 * w.v2;
    }

    double norm(const TangentVector& v) const;

    /// Lower an index: p = G v.
    Covector flat(const TangentVector& v) const {
        return {g11 * v.v1 + g12 * v.v2, g12 * v.v1 + g22 * v.v2};
    }

    /// Solve G v = p by the closed 2x2 inverse. Throws DegenerateMetricError
    /// if det <= 0.
    TangentVector solve(const Covector& p) const;
};

/// Connection coefficients Gamma^k_ij at one chart point, indices 0-based.
/// Symmetric in the two lower indices.
struct Christoffel {
    // gamma[k][i][j]
    std::array<std::array<std::array<double, 2>, 2>, 2> gamma{};

    double operator()(int k, int i, int j) const { return gamma[k][i][j]; }
    double& at(int k, int i, int j) { return gamma[k][i][j]; }
};

using MetricFn = std::function<MetricTensor(const ChartPoint&)>;
using ChristoffelFn = std::function<Christoffel(const ChartPoint&)>;
using VectorField = std::function<TangentVector(const ChartPoint&)>;

/// Kinetic-energy metric of the two-link arm:
///   g11 = J1 + (m1 + 4 m2) l1^2 / 4
///   g22 = J2 + m2 l2^2 / 4
///   g12 = m2 l1 l2 cos(theta1 - theta2) / 2
/// The diagonal does not depend on the configuration.
MetricTensor metric_at(const RobotParams& params, const ChartPoint& q);

/// The four nonzero connection coefficients of this metric in closed form;
/// both mixed-index coefficients Gamma^k_12 vanish identically (the oracle
/// below confirms this from first principles rather than assuming it).
Christoffel christoffel_closed_form(const RobotParams& params, const ChartPoint& q);

/// Levi-Civita coefficients of an arbitrary metric function by central
/// finite differences of the metric entries,
///   Gamma^k_ij = g^kl (d_i g_jl + d_j g_il - d_l g_ij) / 2.
/// Independent of the closed form above; O(h^2) accurate.
Christoffel christoffel_oracle(const MetricFn& metric_fn, const ChartPoint& q, double h = 1e-5);

/// Raise an index: v = G^-1 p. The unique v with g(v, w) = <p, w> for all w.
TangentVector sharp(const MetricTensor& g, const Covector& p);

/// Metric gradient: sharp of a differential. Same computation as sharp, kept
/// under its semantic name.
TangentVector gradient(const MetricTensor& g, const Covector& dV);

/// Covariant derivative of a vector field along a curve through q with
/// velocity v:
///   (DX/Dt)^k = sum_i v_i dX^k/dtheta_i + sum_ij Gamma^k_ij v_i X^j.
/// Field partials by central differences with step h.
TangentVector covariant_derivative_along(const VectorField& field, const ChartPoint& q,
                                         const TangentVector& v, const ChristoffelFn& gamma_at,
                                         double h = 1e-6);

/// Same, with the two-link closed-form connection.
TangentVector covariant_derivative_along(const VectorField& field, const ChartPoint& q,
                                         const TangentVector& v, const RobotParams& params,
                                         double h = 1e-6);

} // namespace twolink
