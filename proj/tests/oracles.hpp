#pragma once
// Independent reference computations used only by the tests.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>

#include "holegf/geometry.hpp"

namespace oracle {

using holegf::pi;
using holegf::Point3;

inline double gk(auto f, double a, double b, double tol = 1e-14) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol, &err);
}

// K(mu), E(mu) straight from their defining integrals.
inline double elliptic_k(double mu) {
    return gk([&](double t) { return 1.0 / std::sqrt(1.0 - mu * std::sin(t) * std::sin(t)); }, 0.0, pi / 2);
}
inline double elliptic_e(double mu) {
    return gk([&](double t) { return std::sqrt(1.0 - mu * std::sin(t) * std::sin(t)); }, 0.0, pi / 2);
}

// Real solid harmonic from the associated Legendre function (Condon-Shortley phase included).
inline double solid_harmonic(const Point3& p, int n, int m) {
    const double r = p.norm();
    const double ct = r > 0 ? p.z() / r : 1.0;
    const double ph = std::atan2(p.y(), p.x());
    const int am = std::abs(m);
    const double P = boost::math::legendre_p(n, am, ct);
    const double trig = m >= 0 ? std::cos(m * ph) : std::sin(m * ph);
    const double sign = ((n + m) % 2 == 0) ? 1.0 : -1.0;
    return sign / boost::math::factorial<double>(n + am) * std::pow(r, n) * P * trig;
}

// w_m(xi) = int_0^{2pi} cos(m phi) (1 - 2 xi cos phi + xi^2)^(-1/2) dphi, rewritten by the
// substitution cos phi -> Heine's integral so that the integrand is positive.
inline double w_heine(int m, double xi) {
    if (xi == 0.0) return m == 0 ? 2.0 * pi : 0.0;
    const double a = (1.0 + xi * xi) / (2.0 * xi), b = (1.0 - xi * xi) / (2.0 * xi);
    auto f = [&](double t) { return std::pow(a + b * std::cosh(t), -(m + 0.5)); };
    boost::math::quadrature::exp_sinh<double> integrator;
    return 2.0 / std::sqrt(xi) * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

// Same w_m by plain angular quadrature; only accurate where there is no cancellation.
inline double w_angular(int m, double xi) {
    return 2.0 * gk([&](double f) { return std::cos(m * f) / std::sqrt(1.0 - 2.0 * xi * std::cos(f) + xi * xi); }, 0.0, pi);
}

// u_n^m(xi) = int_0^1 t^n w_m(xi t) dt.
inline double u_quadrature(int n, int m, double xi) {
    return gk([&](double t) { return std::pow(t, n) * w_heine(m, xi * t); }, 0.0, 1.0, 1e-12);
}

// v_m(xi) = int_0^{2pi} cos(m phi) (1 - 2 xi cos phi + xi^2)^(1/2) dphi.
inline double v_angular(int m, double xi) {
    return 2.0 * gk([&](double f) { return std::cos(m * f) * std::sqrt(1.0 - 2.0 * xi * std::cos(f) + xi * xi); }, 0.0, pi);
}

// The two layer-potential integrals over the plane outside the hole, written with G and its
// normal derivative, with the far tail from the leading asymptotic term.
inline double dirichlet_layer(const Point3& y, const Point3& x, double Rinf) {
    auto f = [&](double rho) {
        return gk(
            [&](double phi) {
                const Point3 xp(rho * std::cos(phi), rho * std::sin(phi), 0.0);
                const double dGdn = y.z() / (4 * pi * std::pow((y - xp).norm(), 3));
                return rho * holegf::green(x, xp) * dGdn;
            },
            0.0, 2 * pi, 1e-13);
    };
    const double body = gk([&](double s) { const double r = std::exp(s); return r * f(r); }, 0.0, std::log(Rinf), 1e-12);
    return -2.0 * body - y.z() / (8 * pi * Rinf * Rinf);
}

inline double neumann_layer(const Point3& y, const Point3& x, double Rinf) {
    auto f = [&](double rho) {
        return gk(
            [&](double phi) {
                const Point3 xp(rho * std::cos(phi), rho * std::sin(phi), 0.0);
                const double dGdn = x.z() / (4 * pi * std::pow((x - xp).norm(), 3));
                return rho * holegf::green(y, xp) * dGdn;
            },
            0.0, 2 * pi, 1e-13);
    };
    const double body = gk([&](double s) { const double r = std::exp(s); return r * f(r); }, 0.0, std::log(Rinf), 1e-12);
    return 2.0 * body + x.z() / (8 * pi * Rinf * Rinf);
}

}  // namespace oracle
