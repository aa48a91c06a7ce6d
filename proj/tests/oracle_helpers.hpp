// Independent closed-form oracles used by the tests. Everything here is
// derived from textbook formulas, not from the library's own solvers.
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

inline Eigen::VectorXd vec3(double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return v;
}

// inverse stereographic projection onto the unit sphere (projection point at
// the north pole, chart plane through the equator): chart g = 4/(1+r^2)^2 Id
inline Eigen::Vector3d chart_to_sphere(const Eigen::VectorXd& x) {
    const double u = 1.0 + x.squaredNorm();
    return {2.0 * x[0] / u, 2.0 * x[1] / u, (x.squaredNorm() - 1.0) / u};
}

inline Eigen::VectorXd sphere_to_chart(const Eigen::Vector3d& p) {
    return vec2(p.x() / (1.0 - p.z()), p.y() / (1.0 - p.z()));
}

// pushforward of a chart velocity to the embedded sphere
inline Eigen::Vector3d chart_velocity_to_sphere(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& v) {
    const double u = 1.0 + x.squaredNorm();
    const double xv = x.dot(v);
    return {2.0 * v[0] / u - 4.0 * x[0] * xv / (u * u),
            2.0 * v[1] / u - 4.0 * x[1] * xv / (u * u), 4.0 * xv / (u * u)};
}

// exact geodesic of the sphere_cap chart metric: great circle mapped back
inline Eigen::VectorXd great_circle_chart(const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                          double t) {
    const Eigen::Vector3d p0 = chart_to_sphere(x0);
    const Eigen::Vector3d w0 = chart_velocity_to_sphere(x0, v0);
    const double s = w0.norm();
    const Eigen::Vector3d p = std::cos(s * t) * p0 + std::sin(s * t) * (w0 / s);
    return sphere_to_chart(p);
}

// Killing covector fields of the unit sphere in the stereographic chart:
// the rotation generator e acts as V(p) = e x p upstairs; K = g . dP(V).
inline Eigen::VectorXd sphere_killing_covector(const Eigen::Vector3d& axis,
                                               const Eigen::VectorXd& x) {
    const Eigen::Vector3d p = chart_to_sphere(x);
    const Eigen::Vector3d V = axis.cross(p);
    const double omz = 1.0 - p.z();
    const Eigen::VectorXd vchart =
        vec2(V.x() / omz + p.x() * V.z() / (omz * omz), V.y() / omz + p.y() * V.z() / (omz * omz));
    const double u = 1.0 + x.squaredNorm();
    return (4.0 / (u * u)) * vchart;
}

inline double polyval(const std::vector<double>& c, double t) {
    double p = 0.0;
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) p = p * t + c[static_cast<std::size_t>(i)];
    return p;
}

// Liouville metric (f(x)+h(y))(dx^2+dy^2): quadratic integral
// F = 1/2 (f+h) (h vx^2 - f vy^2), derived from the Euler-Lagrange equations.
// Chart coefficients in the (v1^2, v1 v2, v2^2) basis.
inline Eigen::VectorXd liouville_integral_coeffs(const std::vector<double>& fx,
                                                 const std::vector<double>& hy,
                                                 const Eigen::VectorXd& x) {
    const double f = polyval(fx, x[0]);
    const double h = polyval(hy, x[1]);
    Eigen::VectorXd c(3);
    c << 0.5 * (f + h) * h, 0.0, -0.5 * (f + h) * f;
    return c;
}

inline Eigen::VectorXd liouville_hamiltonian_coeffs(const std::vector<double>& fx,
                                                    const std::vector<double>& hy,
                                                    const Eigen::VectorXd& x) {
    const double lam = polyval(fx, x[0]) + polyval(hy, x[1]);
    Eigen::VectorXd c(3);
    c << 0.5 * lam, 0.0, 0.5 * lam;
    return c;
}

// Clairaut covector (0, rho(r)^2) of the revolution metric dr^2 + rho^2 dtheta^2
inline Eigen::VectorXd clairaut_covector(const std::vector<double>& rho, const Eigen::VectorXd& x) {
    const double r = polyval(rho, x[0]);
    return vec2(0.0, r * r);
}

// flat-plane Killing covectors: two translations and the rotation x1 v2 - x2 v1
inline Eigen::VectorXd flat_killing_covector(int which, const Eigen::VectorXd& x) {
    switch (which) {
        case 0: return vec2(1.0, 0.0);
        case 1: return vec2(0.0, 1.0);
        default: return vec2(-x[1], x[0]);
    }
}

// degree-2 coefficients (v1^2, v1 v2, v2^2) of the product of two covectors
inline Eigen::VectorXd covector_product_coeffs(const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& b) {
    Eigen::VectorXd c(3);
    c << a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[1] * b[1];
    return c;
}

} // namespace oracle
