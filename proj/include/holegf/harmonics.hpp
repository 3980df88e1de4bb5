#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "holegf/errors.hpp"
#include "holegf/geometry.hpp"

namespace holegf {

// Complete elliptic integrals in the parameter convention, integrand (1 - mu sin^2)^(-+1/2).
struct EllipticPair {
    double k_value;
    double e_value;
    double parameter;
};

inline EllipticPair elliptic_ke(double mu) {
    if (!(mu >= 0.0 && mu < 1.0))
        throw DomainError("elliptic_ke: parameter must lie in [0,1), got " + std::to_string(mu));
    double a = 1.0;
    double b = std::sqrt(1.0 - mu);
    double c2 = mu;  // c_0^2
    double weight = 0.5;
    double sum = weight * c2;
    for (int it = 0; it < 64; ++it) {
        const double an = 0.5 * (a + b);
        const double bn = std::sqrt(a * b);
        const double cn = 0.5 * (a - b);
        weight *= 2.0;
        sum += weight * cn * cn;
        a = an;
        b = bn;
        if (std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * a) break;
    }
    const double k = pi / (2.0 * a);
    return {k, k * (1.0 - sum), mu};
}

// Flat index of (n, m), |m| <= n, in a triangular table.
constexpr int harmonic_index(int n, int m) { return n * (n + 1) + m; }
constexpr int harmonic_count(int p) { return p * p; }

// g[k] = (k-1)!!/k!! for even k (g[0] = 1); odd entries unused.
inline std::vector<double> even_double_factorial_ratios(int kmax) {
    std::vector<double> g(static_cast<std::size_t>(std::max(kmax, 0) + 1), 0.0);
    g[0] = 1.0;
    for (int k = 2; k <= kmax; k += 2) g[k] = g[k - 2] * (k - 1.0) / k;
    return g;
}

// Tables of a_n^m, L_n^m, l_n^m, nu_n^m and N_n^m for all degrees up to 2p-2.
class SpectralConstants {
public:
    explicit SpectralConstants(int p, int max_degree = -1) : p_(p) {
        if (p < 1) throw DomainError("SpectralConstants: p must be >= 1");
        max_degree_ = std::max(max_degree, 2 * p - 2);
        const int size = harmonic_count(max_degree_ + 1);
        a_.assign(size, 0.0);
        big_l_.assign(size, 0.0);
        parity_.assign(size, 0);
        nu_.assign(size, 0.0);
        log_abs_nu_.assign(size, -std::numeric_limits<double>::infinity());
        nu_hat_.assign(size, 0.0);
        norm_.assign(size, 0.0);
        g_ = even_double_factorial_ratios(2 * max_degree_ + 2);

        // log((2j-1)!!) for j >= 0, by running sums
        std::vector<double> log_odd_df(max_degree_ + 2, 0.0);
        for (int j = 1; j < static_cast<int>(log_odd_df.size()); ++j)
            log_odd_df[j] = log_odd_df[j - 1] + std::log(2.0 * j - 1.0);

        for (int n = 0; n <= max_degree_; ++n) {
            // log((n-|m|)!/(n+|m|)!) accumulated while |m| grows
            double log_ratio = 0.0;
            for (int am = 0; am <= n; ++am) {
                if (am > 0) log_ratio -= std::log(double(n + am)) + std::log(double(n - am + 1));
                const double nn = std::sqrt((2.0 * n + 1.0) / (4.0 * pi) * std::exp(log_ratio));
                const bool even = ((n + am) % 2) == 0;
                const double msign = (am % 2) ? -1.0 : 1.0;
                const double a_val = std::sqrt((n + 1.0 + am) * (n + 1.0 - am) / ((2.0 * n + 1.0) * (2.0 * n + 3.0)));
                double l_val = 0.0, nu_val = 0.0, nu_hat = 0.0, log_nu = -std::numeric_limits<double>::infinity();
                if (even) {
                    const double half_sign = (((n + am) / 2) % 2) ? -1.0 : 1.0;
                    const double root = std::sqrt(g_[n - am] * g_[n + am]);
                    l_val = msign * half_sign * std::sqrt((2.0 * n + 1.0) / (4.0 * pi)) * root;
                    nu_hat = half_sign * root;
                    log_nu = log_odd_df[(n - am) / 2] + log_odd_df[(n + am) / 2];
                    nu_val = half_sign * std::exp(log_nu);
                    if (n + am <= 60) nu_val = half_sign * odd_double_factorial(n - am - 1) * odd_double_factorial(n + am - 1);
                }
                for (int m : {am, -am}) {
                    const int i = harmonic_index(n, m);
                    a_[i] = a_val;
                    norm_[i] = msign * nn;
                    parity_[i] = even ? 1 : 0;
                    big_l_[i] = l_val;
                    nu_[i] = nu_val;
                    nu_hat_[i] = nu_hat;
                    log_abs_nu_[i] = log_nu;
                    if (am == 0) break;
                }
            }
        }
    }

    int p() const { return p_; }
    int max_degree() const { return max_degree_; }

    double a(int n, int m) const { return in_table(n, m) ? a_[harmonic_index(n, m)] : 0.0; }
    double big_l(int n, int m) const { return in_table(n, m) ? big_l_[harmonic_index(n, m)] : 0.0; }
    int parity(int n, int m) const { return ((n + m) % 2 == 0) ? 1 : 0; }
    double norm(int n, int m) const { return in_table(n, m) ? norm_[harmonic_index(n, m)] : 0.0; }
    // Overflows to +-inf for n+|m| beyond ~300; use log_abs_nu there.
    double nu(int n, int m) const { return in_table(n, m) ? nu_[harmonic_index(n, m)] : 0.0; }
    double log_abs_nu(int n, int m) const {
        return in_table(n, m) ? log_abs_nu_[harmonic_index(n, m)] : -std::numeric_limits<double>::infinity();
    }
    // nu_n^m / sqrt((n+|m|)!(n-|m|)!), bounded by 1 in magnitude.
    double nu_normalized(int n, int m) const { return in_table(n, m) ? nu_hat_[harmonic_index(n, m)] : 0.0; }
    const std::vector<double>& ratio_table() const { return g_; }

private:
    bool in_table(int n, int m) const { return n >= 0 && n <= max_degree_ && std::abs(m) <= n; }
    static double odd_double_factorial(int k) {
        double r = 1.0;
        for (; k > 1; k -= 2) r *= k;
        return r;
    }

    int p_;
    int max_degree_;
    std::vector<double> a_, big_l_, nu_, log_abs_nu_, nu_hat_, norm_, g_;
    std::vector<int> parity_;
};

// Real solid harmonics R_n^m for n < p.
class SolidHarmonicTable {
public:
    SolidHarmonicTable(Point3 point, int p) : point_(std::move(point)), p_(p), values_(harmonic_count(p), 0.0) {
        if (p < 1) throw DomainError("solid_harmonics: p must be >= 1");
        const double x = point_.x(), y = point_.y(), z = point_.z();
        const double rr = point_.squaredNorm();
        auto R = [&](int n, int m) -> double& { return values_[harmonic_index(n, m)]; };
        R(0, 0) = 1.0;
        if (p > 1) {
            R(1, 1) = -0.5 * x;
            R(1, -1) = 0.5 * y;
        }
        for (int m = 2; m < p; ++m) {
            const double c = R(m - 1, m - 1), s = R(m - 1, -(m - 1));
            R(m, m) = -(x * c + y * s) / (2.0 * m);
            R(m, -m) = (y * c - x * s) / (2.0 * m);
        }
        for (int m = 0; m < p; ++m) {
            for (int sm : {m, -m}) {
                if (m + 1 < p) R(m + 1, sm) = -z * R(m, sm);
                for (int n = m + 1; n + 1 < p; ++n)
                    R(n + 1, sm) = -((2.0 * n + 1.0) * z * R(n, sm) + rr * R(n - 1, sm)) / ((n + 1.0) * (n + 1.0) - double(m) * m);
                if (m == 0) break;
            }
        }
    }

    const Point3& point() const { return point_; }
    int p() const { return p_; }
    double operator()(int n, int m) const { return values_[harmonic_index(n, m)]; }
    std::span<const double> values() const { return values_; }

private:
    Point3 point_;
    int p_;
    std::vector<double> values_;
};

inline SolidHarmonicTable solid_harmonics(const Point3& point, int p) { return SolidHarmonicTable(point, p); }

// Rescaled harmonics T_n^m = sqrt((n+|m|)!(n-|m|)!) R_n^m, which satisfy |T_n^m| <= r^n and
// therefore stay representable at large degree.
class NormalizedBasis {
public:
    explicit NormalizedBasis(int p) : p_(p) {
        if (p < 1) throw DomainError("NormalizedBasis: p must be >= 1");
        diag_.assign(p + 1, 0.0);
        sub_.assign(p + 1, 0.0);
        cz_.assign(harmonic_count(p + 1), 0.0);
        cr_.assign(harmonic_count(p + 1), 0.0);
        for (int m = 1; m <= p; ++m) diag_[m] = std::sqrt((2.0 * m - 1.0) / (2.0 * m));
        for (int m = 0; m <= p; ++m) sub_[m] = std::sqrt(2.0 * m + 1.0);
        for (int n = 1; n <= p; ++n)
            for (int m = 0; m < n; ++m) {
                const double d1 = (n + 1.0) * (n + 1.0) - double(m) * m;
                const double d0 = double(n) * n - double(m) * m;
                cz_[harmonic_index(n, m)] = (2.0 * n + 1.0) / std::sqrt(d1);
                cr_[harmonic_index(n, m)] = std::sqrt(d0 / d1);
            }
    }

    int p() const { return p_; }

    // Writes p^2 values indexed by harmonic_index.
    void evaluate(const Point3& point, std::span<double> out) const { evaluate(point, p_, out); }

    void evaluate(const Point3& point, int p, std::span<double> out) const {
        const double x = point.x(), y = point.y(), z = point.z();
        const double rr = point.squaredNorm();
        double* T = out.data();
        T[0] = 1.0;
        if (p > 1) {
            T[harmonic_index(1, 1)] = -x * std::sqrt(0.5);
            T[harmonic_index(1, -1)] = y * std::sqrt(0.5);
        }
        for (int m = 2; m < p; ++m) {
            const double c = T[harmonic_index(m - 1, m - 1)], s = T[harmonic_index(m - 1, -(m - 1))];
            T[harmonic_index(m, m)] = -diag_[m] * (x * c + y * s);
            T[harmonic_index(m, -m)] = diag_[m] * (y * c - x * s);
        }
        for (int m = 0; m < p; ++m) {
            for (int sm : {m, -m}) {
                if (m + 1 < p) T[harmonic_index(m + 1, sm)] = -sub_[m] * z * T[harmonic_index(m, sm)];
                for (int n = m + 1; n + 1 < p; ++n) {
                    const int k = harmonic_index(n, m);
                    T[harmonic_index(n + 1, sm)] =
                        -(cz_[k] * z * T[harmonic_index(n, sm)] + cr_[k] * rr * T[harmonic_index(n - 1, sm)]);
                }
                if (m == 0) break;
            }
        }
    }

    std::vector<double> evaluate(const Point3& point) const {
        std::vector<double> out(harmonic_count(p_));
        evaluate(point, out);
        return out;
    }

private:
    int p_;
    std::vector<double> diag_, sub_, cz_, cr_;
};

}  // namespace holegf
