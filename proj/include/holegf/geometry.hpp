#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace holegf {

using Point3 = Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;

inline double cylindrical_radius(const Point3& p) { return std::hypot(p.x(), p.y()); }

inline double azimuth(const Point3& p) { return std::atan2(p.y(), p.x()); }

// Free-space Green's function of the Laplace equation.
inline double green(const Point3& y, const Point3& x) { return 1.0 / (4.0 * pi * (y - x).norm()); }

inline Point3 mirror_z(Point3 p) {
    p.z() = -p.z();
    return p;
}

}  // namespace holegf
