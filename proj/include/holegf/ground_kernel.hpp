#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "holegf/errors.hpp"
#include "holegf/geometry.hpp"
#include "holegf/harmonics.hpp"
#include "holegf/quadrature.hpp"

namespace holegf {

struct KernelConfig {
    double scale_radius = 1.0;  // hole radius R
    int p = 12;
    double integral_tolerance = 1e-10;
    double tail_radius = 1e3;

    void validate() const {
        if (!(scale_radius > 0.0)) throw DomainError("KernelConfig: scale_radius must be positive");
        if (!(tail_radius > scale_radius)) throw DomainError("KernelConfig: tail_radius must exceed scale_radius");
        if (p < 2) throw DomainError("KernelConfig: p must be >= 2");
        if (!(integral_tolerance > 0.0 && integral_tolerance < 1.0))
            throw DomainError("KernelConfig: integral_tolerance must lie in (0,1)");
    }
};

enum class KernelPath { series, integral, automatic };

namespace detail {

// Integral over t in [a,b] of the 2pi-periodic inner integral of f(t, cos phi, sin phi).
template <class F>
double nested_ring_integral(F&& f, double a, double b, double tol, const char* who) {
    // Both rules aim below tol and are then judged against tol. The inner one stops at its roundoff
    // floor so its noise cannot stall the outer estimate; an inner result worse than tol aborts at once.
    // Tanh-sinh may stop on a predicted error while reporting the last level difference, hence the margin.
    auto outer = [&](double t) {
        auto inner = [&](double phi) { return f(t, std::cos(phi), std::sin(phi)); };
        const QuadratureResult r = periodic_integral(inner, 0.0, 2.0 * pi, std::max(1e-2 * tol, 1e-13));
        if (!(r.error <= tol * std::max(r.l1, 1e-300)))
            throw QuadratureError(std::string(who) + ": angular quadrature did not reach the requested tolerance",
                                  r.error / std::max(r.l1, 1e-300));
        return r.value;
    };
    const QuadratureResult r = endpoint_integral(outer, a, b, 1e-2 * tol);
    const double rel = r.error / std::max(r.l1, 1e-300);
    if (rel > tol) throw QuadratureError(std::string(who) + ": quadrature did not reach the requested tolerance", rel);
    return r.value;
}

inline void require_inside_unit_ball(const Point3& p, const char* who) {
    if (!(p.norm() < 1.0)) throw DomainError(std::string(who) + ": point must lie strictly inside the ball of radius R");
}

}  // namespace detail

// Dimensionless kernel (R = 1) by quadrature over the hole-complement mapped onto the unit disk.
inline double kernel_integral_scaled(const Point3& y, const Point3& x, double tol = 1e-10) {
    detail::require_inside_unit_ball(y, "kernel_integral");
    detail::require_inside_unit_ball(x, "kernel_integral");
    if (y.z() == 0.0) return 0.0;
    const double ry2 = y.squaredNorm(), rx2 = x.squaredNorm();
    auto f = [&](double eta, double c, double s) {
        const double qy2 = ry2 * eta * eta - 2.0 * eta * (y.x() * c + y.y() * s) + 1.0;
        const double qx2 = rx2 * eta * eta - 2.0 * eta * (x.x() * c + x.y() * s) + 1.0;
        return eta / (qy2 * std::sqrt(qy2 * qx2));
    };
    const double v = detail::nested_ring_integral(f, 0.0, 1.0, tol, "kernel_integral");
    return -y.z() / (8.0 * pi * pi) * v;
}

inline double kernel_integral(const Point3& y, const Point3& x, const KernelConfig& config) {
    config.validate();
    const double R = config.scale_radius;
    return kernel_integral_scaled(y / R, x / R, config.integral_tolerance) / R;
}

// Kernel integral over the annulus R <= rho' <= R_inf plus the far-field tail estimate.
inline double kernel_integral_truncated(const Point3& y, const Point3& x, double scale_radius, double tail_radius,
                                        double tol = 1e-10) {
    if (!(scale_radius > 0.0 && tail_radius > scale_radius))
        throw DomainError("kernel_integral_truncated: need 0 < scale_radius < tail_radius");
    if (y.z() == 0.0) return 0.0;
    const double ry2 = y.squaredNorm(), rx2 = x.squaredNorm();
    // rho' = R exp(s), so rho' drho' = rho'^2 ds
    auto f = [&](double s, double c, double sn) {
        const double rho = scale_radius * std::exp(s);
        const double dy = rho * rho - 2.0 * rho * (y.x() * c + y.y() * sn) + ry2;
        const double dx = rho * rho - 2.0 * rho * (x.x() * c + x.y() * sn) + rx2;
        return rho * rho / (dy * std::sqrt(dy * dx));
    };
    const double v = detail::nested_ring_integral(f, 0.0, std::log(tail_radius / scale_radius), tol,
                                                  "kernel_integral_truncated");
    return -y.z() / (8.0 * pi * pi) * v - y.z() / (8.0 * pi * tail_radius * tail_radius);
}

// u_n^m(xi), w_m(xi), v_m(xi) for a source on the ground ring.
//
// Forward use of the three-term recurrences amplifies rounding by roughly xi^(-n) (for u^0) and
// xi^(-2m) (for w and the m layers), so each sequence is run in the stable direction:
//   w_m   forward when cheap, otherwise Miller's backward recurrence normalised by w_0 = 4K;
//   u_n^0 forward when cheap, otherwise backward from a high starting degree;
//   u^m   layer recurrence while xi^(-2m) stays small, the convergent power series above that.
class RadialTable {
public:
    enum class Method { forward, backward, series };

    static constexpr double forward_amplification_limit = 1e4;
    static constexpr double layer_amplification_limit = 1e3;

    // Layers m = 0..m_max; layer m holds n = m+1, m+3, ... up to top_degree + (m_max - m).
    RadialTable(double xi, int m_max, int top_degree) : xi_(xi), m_max_(m_max), top_degree_(top_degree) {
        if (!(xi > 0.0 && xi < 1.0)) throw DomainError("radial_table: xi must lie in (0,1), got " + std::to_string(xi));
        if (m_max < 0 || top_degree < m_max + 1) throw DomainError("radial_table: inconsistent table extent");
        const EllipticPair ke = elliptic_ke(xi * xi);
        k_ = ke.k_value;
        e_ = ke.e_value;
        const double lx = -std::log(xi);
        build_w(lx);
        build_v();
        build_u0(lx);
        build_layers(lx);
        self_check();
    }

    double xi() const { return xi_; }
    int m_max() const { return m_max_; }
    int max_degree(int m) const { return top_degree_ + (m_max_ - std::abs(m)); }

    double w(int m) const { return w_.at(std::abs(m)); }
    double v(int m) const { return v_.at(std::abs(m)); }
    double u(int n, int m) const {
        const int am = std::abs(m);
        if (am > m_max_ || n <= am || (n + am) % 2 == 0 || n > max_degree(am))
            throw DomainError("radial_table: u(" + std::to_string(n) + "," + std::to_string(m) + ") not stored");
        return u_[am][(n - am - 1) / 2];
    }
    int w_size() const { return static_cast<int>(w_.size()); }

    Method w_method() const { return w_method_; }
    Method u0_method() const { return u0_method_; }
    // First layer evaluated by power series (m_max + 1 when none).
    int first_series_layer() const { return first_series_layer_; }
    // Relative mismatch of the closed forms for w_1 and u_1^0 against the computed sequences.
    double self_check_error() const { return self_check_error_; }
    bool degraded() const { return degraded_; }

    // Power series for u_n^m, convergent for xi < 1.
    static double u_series(double xi, int n, int m) {
        std::vector<double> t = series_terms(xi, std::abs(m));
        double s = 0.0;
        for (std::size_t j = t.size(); j-- > 0;) s += t[j] / (n + 2.0 * j + std::abs(m) + 1.0);
        return 2.0 * pi * s;
    }

private:
    // alpha_j alpha_{j+m} xi^(2j+m), alpha_j = (2j-1)!!/(2j)!!, until negligible
    static std::vector<double> series_terms(double xi, int m) {
        double am = 1.0;
        for (int j = 1; j <= m; ++j) am *= (2.0 * j - 1.0) / (2.0 * j);
        double t = am * std::pow(xi, m);
        std::vector<double> terms;
        const double first = t;
        const double x2 = xi * xi;
        for (int j = 0; j < 2000000; ++j) {
            terms.push_back(t);
            if (t <= 1e-18 * first || t == 0.0) break;
            t *= (2.0 * j + 1.0) / (2.0 * j + 2.0) * (2.0 * (j + m) + 1.0) / (2.0 * (j + m) + 2.0) * x2;
        }
        return terms;
    }

    void build_w(double lx) {
        const int m_top = m_max_ + 1;
        w_.assign(m_top + 1, 0.0);
        const double a = (1.0 + xi_ * xi_) / xi_;
        if (2.0 * m_top * lx <= std::log(forward_amplification_limit)) {
            w_method_ = Method::forward;
            w_[0] = 4.0 * k_;
            w_[1] = 4.0 / xi_ * (k_ - e_);
            for (int m = 2; m <= m_top; ++m)
                w_[m] = a * (2.0 * m - 2.0) / (2.0 * m - 1.0) * w_[m - 1] - (2.0 * m - 3.0) / (2.0 * m - 1.0) * w_[m - 2];
            return;
        }
        w_method_ = Method::backward;
        const int extra = static_cast<int>(std::ceil(std::log(1e18) / (2.0 * lx))) + 8;
        const int top = m_top + extra;
        std::vector<double> seq(top + 2, 0.0);
        seq[top + 1] = 0.0;
        seq[top] = 1e-30;
        for (int m = top + 1; m >= 2; --m) {
            seq[m - 2] = (a * (2.0 * m - 2.0) / (2.0 * m - 1.0) * seq[m - 1] - seq[m]) * (2.0 * m - 1.0) / (2.0 * m - 3.0);
            if (std::abs(seq[m - 2]) > 1e250)
                for (int k = m - 2; k <= top + 1; ++k) seq[k] *= 1e-250;
        }
        const double scale = 4.0 * k_ / seq[0];
        for (int m = 0; m <= m_top; ++m) w_[m] = seq[m] * scale;
    }

    void build_v() {
        v_.assign(m_max_ + 1, 0.0);
        v_[0] = 8.0 * e_ - 4.0 * (1.0 - xi_ * xi_) * k_;
        for (int m = 1; m <= m_max_; ++m) v_[m] = (1.0 + xi_ * xi_) * w_[m] - xi_ * (w_[m + 1] + w_[m - 1]);
    }

    void build_u0(double lx) {
        u_.assign(m_max_ + 1, {});
        const int n_top = max_degree(0);
        std::vector<double>& u0 = u_[0];
        u0.assign((n_top - 1) / 2 + 1, 0.0);
        const double x2 = xi_ * xi_;
        const double one_m = 1.0 - x2;
        if ((n_top - 1) * lx <= std::log(forward_amplification_limit)) {
            u0_method_ = Method::forward;
            double prev = 0.0;
            for (int n = 1; n <= n_top; n += 2) {
                const double un = (4.0 * e_ - 4.0 * n * one_m * k_ + (n - 1.0) * (n - 1.0) * prev) / (double(n) * n * x2);
                u0[(n - 1) / 2] = un;
                prev = un;
            }
            return;
        }
        u0_method_ = Method::backward;
        const int extra = std::min(static_cast<int>(std::ceil(std::log(1e18) / (2.0 * lx))) + 4, 1000000);
        const int start = n_top + 2 * extra;
        double un = 4.0 * k_ / (start + 1.0);  // u_n^0 ~ w_0/(n+1) at large n
        for (int n = start; n >= 3; n -= 2) {
            const double prev = (double(n) * n * x2 * un - 4.0 * e_ + 4.0 * n * one_m * k_) / ((n - 1.0) * (n - 1.0));
            if (n - 2 <= n_top) u0[(n - 3) / 2] = prev;
            un = prev;
        }
    }

    void build_layers(double lx) {
        const double x2 = xi_ * xi_;
        first_series_layer_ = m_max_ + 1;
        for (int m = 1; m <= m_max_; ++m) {
            const int n_top = max_degree(m);
            std::vector<double>& layer = u_[m];
            layer.assign((n_top - m - 1) / 2 + 1, 0.0);
            if (first_series_layer_ > m_max_ && 2.0 * m * lx > std::log(layer_amplification_limit))
                first_series_layer_ = m;
            if (m >= first_series_layer_) {
                const std::vector<double> t = series_terms(xi_, m);
                for (int n = m + 1; n <= n_top; n += 2) {
                    double s = 0.0;
                    for (std::size_t j = t.size(); j-- > 0;) s += t[j] / (n + 2.0 * j + m + 1.0);
                    layer[(n - m - 1) / 2] = 2.0 * pi * s;
                }
                continue;
            }
            const int mp = m - 1;  // source layer
            for (int n = mp + 1; n + 1 <= n_top; n += 2) {
                const double un = u(n, mp), un2 = u(n + 2, mp);
                double val;
                if (m == 1) {
                    val = ((n + 1.0) * un + (n + 2.0) * x2 * un2 + 4.0 * (1.0 - x2) * k_ - 8.0 * e_) / ((2.0 * n + 3.0) * xi_);
                } else {
                    val = 2.0 / ((2.0 * n + 3.0) * xi_) * ((n + 1.0) * un + (n + 2.0) * x2 * un2 - v_[mp]) - u(n + 1, mp - 1);
                }
                layer[(n + 1 - m - 1) / 2] = val;
            }
        }
    }

    void self_check() {
        const double w1 = 4.0 / xi_ * (k_ - e_);
        const double u10 = 4.0 / (xi_ * xi_) * (e_ - (1.0 - xi_ * xi_) * k_);
        self_check_error_ = std::max(std::abs(w_[1] - w1) / std::abs(w1), std::abs(u_[0][0] - u10) / std::abs(u10));
        // the closed forms themselves lose about eps/xi^2 to cancellation
        const double allowed = std::max(1e-10, 100.0 * 2.2e-16 / (xi_ * xi_));
        degraded_ = self_check_error_ > allowed;
    }

    double xi_;
    int m_max_;
    int top_degree_;
    double k_ = 0.0, e_ = 0.0;
    std::vector<double> w_, v_;
    std::vector<std::vector<double>> u_;
    Method w_method_ = Method::forward;
    Method u0_method_ = Method::forward;
    int first_series_layer_ = 0;
    double self_check_error_ = 0.0;
    bool degraded_ = false;
};

// Table sized for truncation number p: m <= p-2, n <= 2p-3 at m = 0.
inline RadialTable radial_table(double xi, int p) {
    if (p < 2) throw DomainError("radial_table: p must be >= 2");
    return RadialTable(xi, p - 2, p - 1);
}

// Coupling table of the double series K = sum J_{nn'}^m R_{n'}^m(x) R_n^m(y), in the rescaled
// form hat J = J / (c_n c_{n'}) with c_n = sqrt((n+|m|)!(n-|m|)!). Entries exist for n < p and
// n' <= inner_degree.
class SeriesCoefficients {
public:
    SeriesCoefficients(const SpectralConstants& constants, int inner_degree)
        : p_(constants.p()), inner_degree_(inner_degree) {
        const std::vector<double> g = even_double_factorial_ratios(2 * inner_degree + 2);
        auto nu_hat = [&](int n, int m) {
            const int am = std::abs(m);
            if (n < am || (n + am) % 2) return 0.0;
            const double sign = (((n + am) / 2) % 2) ? -1.0 : 1.0;
            return sign * std::sqrt(g[n - am] * g[n + am]);
        };
        table_.assign(static_cast<std::size_t>(harmonic_count(p_)) * (inner_degree + 1), 0.0);
        for (int n = 0; n < p_; ++n)
            for (int m = -n; m <= n; ++m) {
                const double left = -(m == 0 ? 1.0 : 2.0) / (4.0 * pi) * constants.nu_normalized(n + 1, m) *
                                    std::sqrt((n + 1.0) * (n + 1.0) - double(m) * m);
                for (int k = std::abs(m); k <= inner_degree; ++k)
                    table_[index(n, k, m)] = left * nu_hat(k, m) / (n + k + 1.0);
            }
    }

    int p() const { return p_; }
    int inner_degree() const { return inner_degree_; }
    double normalized(int n, int np, int m) const {
        if (n < 0 || n >= p_ || np > inner_degree_ || std::abs(m) > n || std::abs(m) > np) return 0.0;
        return table_[index(n, np, m)];
    }

private:
    std::size_t index(int n, int np, int m) const {
        return static_cast<std::size_t>(harmonic_index(n, m)) * (inner_degree_ + 1) + np;
    }
    int p_;
    int inner_degree_;
    std::vector<double> table_;
};

// Source-side factor of the kernel series. Coefficients are stored rescaled,
// hat U_n^m = U_n^m / sqrt((n+|m|)!(n-|m|)!), to pair with NormalizedBasis values.
class SourceSignature {
public:
    enum class Branch { interior, ground };

    SourceSignature(Point3 source, int p, Branch branch, std::vector<double> normalized)
        : source_(std::move(source)), p_(p), branch_(branch), normalized_(std::move(normalized)) {}

    const Point3& source() const { return source_; }
    int p() const { return p_; }
    Branch branch() const { return branch_; }
    double normalized(int n, int m) const { return normalized_[harmonic_index(n, m)]; }
    std::span<const double> normalized_values() const { return normalized_; }

    // Coefficient in the R_n^m convention; may overflow for large n.
    double value(int n, int m) const {
        const double u = normalized(n, m);
        if (u == 0.0) return 0.0;
        const int am = std::abs(m);
        return u * std::exp(0.5 * (std::lgamma(n + am + 1.0) + std::lgamma(n - am + 1.0)));
    }

    // Sum over n < p of hat U_n^m T_n^m(y) with T from NormalizedBasis.
    double contract(std::span<const double> basis) const {
        double s = 0.0;
        for (std::size_t i = 0; i < normalized_.size(); ++i) s += normalized_[i] * basis[i];
        return s;
    }

private:
    Point3 source_;
    int p_;
    Branch branch_;
    std::vector<double> normalized_;
};

struct SignatureOptions {
    enum class Branch { automatic, interior, ground } branch = Branch::automatic;
    int max_inner_degree = 0;  // 0: converge the inner series to double precision
};

namespace detail {

inline int inner_series_degree(double r, int cap) {
    int degree = 0;
    if (r > 0.0) degree = static_cast<int>(std::ceil(std::log(1e-17 * (1.0 - r * r)) / std::log(r)));
    degree = std::max(degree, 1);
    if (cap > 0) degree = std::min(degree, cap);
    return degree;
}

inline std::vector<double> interior_signature(const Point3& x, const SpectralConstants& c, int cap) {
    const int p = c.p();
    std::vector<double> out(harmonic_count(p), 0.0);
    const int deg = inner_series_degree(x.norm(), cap);
    const NormalizedBasis basis(deg + 1);
    const std::vector<double> t = basis.evaluate(x);
    const std::vector<double> g = even_double_factorial_ratios(2 * deg + 2);
    std::vector<double> s;
    for (int m = -(p - 2); m <= p - 2; ++m) {
        const int am = std::abs(m);
        s.clear();
        for (int k = am; k <= deg; k += 2) {
            const double sign = (((k + am) / 2) % 2) ? -1.0 : 1.0;
            s.push_back(sign * std::sqrt(g[k - am] * g[k + am]) * t[harmonic_index(k, m)]);
        }
        const double pref = -(m == 0 ? 1.0 : 2.0) / (4.0 * pi);
        for (int n = am + 1; n < p; n += 2) {
            double sum = 0.0;
            for (std::size_t j = s.size(); j-- > 0;) sum += s[j] / (n + am + 2.0 * j + 1.0);
            out[harmonic_index(n, m)] =
                pref * c.nu_normalized(n + 1, m) * std::sqrt((n + 1.0) * (n + 1.0) - double(m) * m) * sum;
        }
    }
    return out;
}

inline std::vector<double> ground_signature(const Point3& x, const SpectralConstants& c) {
    const int p = c.p();
    std::vector<double> out(harmonic_count(p), 0.0);
    const double xi = cylindrical_radius(x);
    const double phi = azimuth(x);
    const RadialTable table = radial_table(xi, p);
    for (int m = -(p - 2); m <= p - 2; ++m) {
        const int am = std::abs(m);
        const double trig = m >= 0 ? std::cos(m * phi) : std::sin(m * phi);
        const double pref = -(m == 0 ? 1.0 : 2.0) / (8.0 * pi * pi) * trig;
        for (int n = am + 1; n < p; n += 2)
            out[harmonic_index(n, m)] = pref * c.nu_normalized(n + 1, m) *
                                        std::sqrt((n + 1.0) * (n + 1.0) - double(m) * m) * table.u(n, am);
    }
    return out;
}

}  // namespace detail

// x is dimensionless (already divided by the scale radius).
inline SourceSignature source_signature(const Point3& x, const SpectralConstants& constants,
                                        const SignatureOptions& options = {}) {
    if (!(x.norm() < 1.0)) throw DomainError("source_signature: |x| must be < 1 (series diverges)");
    if (constants.p() < 2) throw DomainError("source_signature: p must be >= 2");
    const double xi = cylindrical_radius(x);
    bool ground = false;
    switch (options.branch) {
        case SignatureOptions::Branch::automatic: ground = (x.z() == 0.0 && xi > 0.0); break;
        case SignatureOptions::Branch::ground:
            if (x.z() != 0.0 || !(xi > 0.0)) throw DomainError("source_signature: ground branch needs z = 0 and rho > 0");
            ground = true;
            break;
        case SignatureOptions::Branch::interior: ground = false; break;
    }
    if (ground) return SourceSignature(x, constants.p(), SourceSignature::Branch::ground, detail::ground_signature(x, constants));
    return SourceSignature(x, constants.p(), SourceSignature::Branch::interior,
                           detail::interior_signature(x, constants, options.max_inner_degree));
}

// Kernel from a signature built at x / R.
inline double kernel_series(const Point3& y, const SourceSignature& signature, const KernelConfig& config) {
    config.validate();
    const double R = config.scale_radius;
    const Point3 ys = y / R;
    if (!(ys.norm() < 1.0)) throw DomainError("kernel_series: |y| must be < R");
    const NormalizedBasis basis(signature.p());
    return signature.contract(basis.evaluate(ys)) / R;
}

inline double kernel_series(const Point3& y, const Point3& x, const KernelConfig& config) {
    config.validate();
    const SpectralConstants constants(config.p);
    return kernel_series(y, source_signature(x / config.scale_radius, constants), config);
}

inline constexpr double series_radius_limit = 0.95;

// Dirichlet kernel K^(D)(y, x; R).
inline double kernel_dirichlet(const Point3& y, const Point3& x, const KernelConfig& config,
                               KernelPath path = KernelPath::automatic) {
    config.validate();
    if (path == KernelPath::automatic) {
        const double R = config.scale_radius;
        path = (y.norm() <= series_radius_limit * R && x.norm() <= series_radius_limit * R) ? KernelPath::series
                                                                                           : KernelPath::integral;
    }
    return path == KernelPath::series ? kernel_series(y, x, config) : kernel_integral(y, x, config);
}

// Neumann kernel K^(N)(y, x) = -K^(D)(x, y).
inline double kernel_neumann(const Point3& y, const Point3& x, const KernelConfig& config,
                             KernelPath path = KernelPath::automatic) {
    return -kernel_dirichlet(x, y, config, path);
}

}  // namespace holegf
