#pragma once

#include <boost/math/policies/policy.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>
#include <cmath>

namespace holegf {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;
    bool converged() const { return error <= tolerance * std::max(l1, 1e-300); }
    double tolerance = 0.0;
};

// Trapezoid rule on a full period; converges geometrically for smooth periodic integrands.
template <class F>
QuadratureResult periodic_integral(F&& f, double a, double b, double tol, std::size_t max_refinements = 18) {
    using namespace boost::math::policies;
    using quiet = policy<evaluation_error<ignore_error>, domain_error<ignore_error>>;
    QuadratureResult r;
    r.tolerance = tol;
    r.value = boost::math::quadrature::trapezoidal(f, a, b, tol, max_refinements, &r.error, &r.l1, quiet());
    return r;
}

// Adaptive Gauss-Kronrod (15 points) on a finite interval.
template <class F>
QuadratureResult adaptive_integral(F&& f, double a, double b, double tol, unsigned max_depth = 18) {
    QuadratureResult r;
    r.tolerance = tol;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &r.error, &r.l1);
    return r;
}

// Tanh-sinh on a finite interval. Nodes cluster double-exponentially at both ends, which keeps the
// error estimate honest for integrands with (near) endpoint singularities.
template <class F>
QuadratureResult endpoint_integral(F&& f, double a, double b, double tol) {
    using namespace boost::math::policies;
    using quiet = policy<evaluation_error<ignore_error>>;
    thread_local boost::math::quadrature::tanh_sinh<double, quiet> rule;
    QuadratureResult r;
    r.tolerance = tol;
    std::size_t levels = 0;
    r.value = rule.integrate(f, a, b, tol, &r.error, &r.l1, &levels);
    return r;
}

}  // namespace holegf
