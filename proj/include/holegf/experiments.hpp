#pragma once

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "holegf/bem_solver.hpp"
#include "holegf/errors.hpp"
#include "holegf/geometry.hpp"
#include "holegf/ground_kernel.hpp"
#include "holegf/surface_mesh.hpp"

namespace holegf {

using ProgressFn = std::function<void(const std::string&)>;

// ---- analytic bump solution ----

// Unit grounded hemisphere on a grounded plane, unit charge at (0,0,h): the charge, its mirror in
// the plane, and their Kelvin images in the sphere.
struct BumpImages {
    Point3 source, mirror, kelvin_plus, kelvin_minus;
    double kelvin_strength;

    explicit BumpImages(double h)
        : source(0, 0, h), mirror(0, 0, -h), kelvin_plus(0, 0, 1.0 / h), kelvin_minus(0, 0, -1.0 / h),
          kelvin_strength(1.0 / h) {
        if (!(h > 1.0)) throw DomainError("bump: source height must exceed 1");
    }
};

inline double analytic_bump_potential(const Point3& y, double h) {
    const BumpImages im(h);
    for (const Point3& q : {im.source, im.mirror, im.kelvin_plus, im.kelvin_minus})
        if (y == q) throw DomainError("analytic_bump_potential: y coincides with a source or image point");
    return green(y, im.source) - green(y, im.mirror) - im.kelvin_strength * green(y, im.kelvin_plus) +
           im.kelvin_strength * green(y, im.kelvin_minus);
}

inline double relative_l2_error(std::span<const double> f, std::span<const double> ref) {
    if (f.size() != ref.size()) throw DomainError("relative_l2_error: size mismatch");
    if (f.empty()) throw DomainError("relative_l2_error: no samples");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        num += (f[i] - ref[i]) * (f[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    if (!(den > 0.0)) throw DomainError("relative_l2_error: reference has zero norm");
    return std::sqrt(num / den);
}

// Smallest p with (r0/re)^p <= eps.
inline int choose_truncation(double r0, double re, double eps) {
    if (!(r0 > 0.0 && re >= r0)) throw DomainError("choose_truncation: need re >= r0 > 0");
    if (re == r0) throw DomainError("choose_truncation: re = r0 needs infinitely many terms");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("choose_truncation: eps must lie in (0,1)");
    const double x = std::log(eps) / std::log(r0 / re);
    return std::max(2, static_cast<int>(std::ceil(x - 1e-9)));
}

// ---- cost model ----

// Root of exp(2t)(1 - t) = 1: where the bracket of dC_fact/dp changes sign.
inline double solve_alpha_star() {
    auto f = [](double t) { return std::exp(2.0 * t) * (1.0 - t) - 1.0; };
    boost::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, 0.5, 0.99, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

struct CostSample {
    double receivers = 0;  // M
    double sources = 0;    // N, inside r0
    double extension = 0;  // Ne - N
    int p = 0;
    double seconds = 0;
};

struct CostModel {
    static constexpr double alpha_star = 0.79681213;
    static double beta() { return std::exp(alpha_star); }
    static double p_c(double eps) { return std::log(1.0 / eps) / alpha_star; }
    // Square bracket of dC_fact/dp; zero at p_c, positive above.
    static double crossover_bracket(double p, double eps) {
        const double g = std::pow(eps, -2.0 / p);
        return (g - 1.0) - g * std::log(1.0 / eps) / p;
    }

    double cost_exponent = 3.0;  // BEM cost N^alpha
    std::optional<double> A, B, C, D;

    bool fitted() const { return A && B && C && D; }
    void require_fitted() const {
        if (!fitted()) throw DomainError("CostModel: constants A, B, C, D have not been fitted");
    }

    // Factored-kernel cost for M receivers, N sources inside r0 and `extension` more outside.
    double factored_cost(double M, double N, double extension, double p) const {
        require_fitted();
        return *A * M * p * p + *B * N * p * p * p + *C * extension * p * p;
    }
    double bem_cost(double Ne) const {
        require_fitted();
        return *D * std::pow(Ne, cost_exponent);
    }

    // Least squares for A, B, C from timings t = A M p^2 + B N p^3 + C (Ne - N) p^2.
    void fit_factored(const std::vector<CostSample>& s) {
        if (s.size() < 3) throw DomainError("CostModel: at least three timing samples are needed");
        Eigen::MatrixXd X(s.size(), 3);
        Eigen::VectorXd t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double p = s[i].p;
            X.row(i) << s[i].receivers * p * p, s[i].sources * p * p * p, s[i].extension * p * p;
            t[i] = s[i].seconds;
        }
        const Eigen::VectorXd c = X.colPivHouseholderQr().solve(t);
        A = c[0];
        B = c[1];
        C = c[2];
    }
    // Least squares for D from BEM timings t = D Ne^alpha.
    void fit_bem(const std::vector<std::pair<double, double>>& size_seconds) {
        if (size_seconds.size() < 3) throw DomainError("CostModel: at least three timing samples are needed");
        double num = 0.0, den = 0.0;
        for (const auto& [n, t] : size_seconds) {
            const double x = std::pow(n, cost_exponent);
            num += x * t;
            den += x * x;
        }
        D = num / den;
    }
};

struct CostOptimum {
    double delta_opt = 0;          // minimizer of the small-delta BEM cost
    int kernel_p_opt = 0;          // minimizer of the factored cost alone
    double kernel_ratio_opt = 0;   // eps^(-1/p) at that p
    double beta = 0;
    struct Point {
        double delta, p, factored, bem, total;
    };
    std::vector<Point> curve;
};

// M = N receivers/sources inside r0 spread over area a0; extension sampled at the same density.
inline CostOptimum cost_optimizer(const CostModel& model, double M, double N, double a0, double r0, double eps,
                                  const std::vector<double>& deltas = {}) {
    model.require_fitted();
    if (!(N > 0 && a0 > 0 && r0 > 0 && eps > 0 && eps < 1)) throw DomainError("cost_optimizer: invalid sizes");
    const double L = std::log(1.0 / eps), alpha = model.cost_exponent;
    const double rho = N / a0;
    CostOptimum out;
    out.beta = CostModel::beta();
    // dC/d delta = -3 B N L^3 / delta^4 + 2 alpha D (pi r0^2 / a0) N^alpha = 0
    out.delta_opt = std::pow(3.0 * *model.B * a0 * L * L * L / (2.0 * alpha * *model.D * pi * r0 * r0 * std::pow(N, alpha - 1.0)),
                             0.25);
    double best = std::numeric_limits<double>::infinity();
    const int pmax = static_cast<int>(std::ceil(CostModel::p_c(eps))) + 200;
    for (int p = 2; p <= pmax; ++p) {
        const double re = r0 * std::pow(eps, -1.0 / p);
        const double c = model.factored_cost(M, N, rho * pi * (re * re - r0 * r0), p);
        if (c < best) {
            best = c;
            out.kernel_p_opt = p;
        }
    }
    out.kernel_ratio_opt = std::pow(eps, -1.0 / out.kernel_p_opt);
    for (double d : deltas) {
        const double p = L / std::log1p(d);
        const double ext = rho * pi * r0 * r0 * ((1 + d) * (1 + d) - 1);
        const double f = model.factored_cost(M, N, ext, p), b = model.bem_cost(N + ext);
        out.curve.push_back({d, p, f, b, f + b});
    }
    return out;
}

// ---- kernel accuracy map ----

struct AccuracyMapConfig {
    std::vector<double> ratios;  // re / r0
    std::vector<int> p_values;
    int receivers = 64;
    int sources = 256;
    unsigned seed = 1;
    double reference_tolerance = 1e-12;
};

struct AccuracyCell {
    double ratio = 0;
    int p = 0;
    double eps2 = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // empty when the cell was computed
};

struct AccuracyLayout {
    std::vector<Point3> receivers, sources;
};

inline constexpr double ring_fill = 0.95;

// Receivers on the arc where the unit hemisphere meets y = 0; half the sources on the hemisphere,
// half on the flat ring r0 <= rho <= r0 + ring_fill (re - r0) (r0 = 1).
inline AccuracyLayout accuracy_layout(double ratio, int receivers, int sources, unsigned seed) {
    AccuracyLayout l;
    for (int k = 0; k < receivers; ++k) {
        const double t = pi * (k + 0.5) / receivers;
        l.receivers.emplace_back(std::cos(t), 0.0, std::sin(t));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int on_sphere = sources / 2;
    for (int k = 0; k < on_sphere; ++k) {
        const double z = u(rng), a = 2 * pi * u(rng), s = std::sqrt(1 - z * z);
        l.sources.emplace_back(s * std::cos(a), s * std::sin(a), z);
    }
    // ring sources stop short of re, as panel centroids do; the reference integral is near-singular at re
    const double rmax = 1.0 + ring_fill * (ratio - 1.0);
    for (int k = on_sphere; k < sources; ++k) {
        const double rho = std::sqrt(1.0 + (rmax * rmax - 1.0) * u(rng)), a = 2 * pi * u(rng);
        l.sources.emplace_back(rho * std::cos(a), rho * std::sin(a), 0.0);
    }
    return l;
}

inline std::vector<AccuracyCell> accuracy_map(const AccuracyMapConfig& cfg, const ProgressFn& progress = {}) {
    std::vector<AccuracyCell> cells;
    for (double ratio : cfg.ratios) {
        if (!(ratio > 1.0)) throw DomainError("accuracy_map: ratios must exceed 1");
        const AccuracyLayout l = accuracy_layout(ratio, cfg.receivers, cfg.sources, cfg.seed);
        const long M = static_cast<long>(l.receivers.size()), S = static_cast<long>(l.sources.size());
        std::vector<double> ref(M * S);
        std::string ref_error;
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < M; ++i)
            for (long j = 0; j < S; ++j) {
                try {
                    ref[i * S + j] = kernel_integral_scaled(l.receivers[i] / ratio, l.sources[j] / ratio, cfg.reference_tolerance) / ratio;
                } catch (const QuadratureError& e) {
#pragma omp critical
                    ref_error = e.what();
                }
            }
        for (int p : cfg.p_values) {
            AccuracyCell cell{ratio, p, std::numeric_limits<double>::quiet_NaN(), ref_error};
            if (ref_error.empty()) {
                try {
                    const SpectralConstants c(p);
                    const NormalizedBasis basis(p);
                    std::vector<std::vector<double>> t(M);
                    for (long i = 0; i < M; ++i) t[i] = basis.evaluate(l.receivers[i] / ratio);
                    std::vector<double> f(M * S);
                    for (long j = 0; j < S; ++j) {
                        const SourceSignature sig = source_signature(l.sources[j] / ratio, c);
                        for (long i = 0; i < M; ++i) f[i * S + j] = sig.contract(t[i]) / ratio;
                    }
                    cell.eps2 = relative_l2_error(f, ref);
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
            cells.push_back(cell);
        }
        if (progress) progress("accuracy map: ratio " + std::to_string(ratio) + " done");
    }
    return cells;
}

// ---- evaluation grids ----

// Points of the plane y = 0 on a square lattice, kept when `inside` accepts them.
inline std::vector<Point3> plane_grid(double half_width, double zmin, double zmax, double spacing,
                                      const std::function<bool(const Point3&)>& inside) {
    std::vector<Point3> pts;
    const int nx = static_cast<int>(std::floor(half_width / spacing));
    const int nz0 = static_cast<int>(std::ceil(zmin / spacing)), nz1 = static_cast<int>(std::floor(zmax / spacing));
    for (int iz = nz0; iz <= nz1; ++iz)
        for (int ix = -nx; ix <= nx; ++ix) {
            const Point3 y(ix * spacing, 0.0, iz * spacing);
            if (inside(y)) pts.push_back(y);
        }
    return pts;
}

inline double object_mean_diameter(const PanelMesh& m) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < m.size(); ++j)
        if (m.tag(j) != RegionTag::extension) {
            s += m.panel(j).diameter;
            ++n;
        }
    return n ? s / n : 0.0;
}


struct SolveOutcome {
    double eps2 = std::numeric_limits<double>::quiet_NaN();
    int p = 0;
    std::size_t panels = 0;
    double relative_residual = 0;
    double seconds = 0;
    FieldGrid field;
    std::vector<std::string> warnings;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline SolveOutcome solve_and_sample(std::shared_ptr<const PanelMesh> mesh, const DomainSpec& dom, const BemConfig& cfg,
                                     std::vector<PointCharge> charges, const std::vector<Point3>& pts,
                                     const SurfacePredicate& below, const std::string& label) {
    const auto t0 = std::chrono::steady_clock::now();
    BemSystem sys = assemble(mesh, dom, cfg);
    sys.set_point_sources(std::move(charges));
    const SolveReport r = solve(sys);
    SolveOutcome out;
    out.field = evaluate_field(sys, r.sigma, pts, below, label);
    out.p = cfg.use_ground_kernel ? cfg.p : 0;
    out.panels = mesh->size();
    out.relative_residual = r.relative_residual;
    out.warnings = sys.warnings();
    out.seconds = seconds_since(t0);
    return out;
}

}  // namespace detail

// ---- bump benchmark ----

struct BumpConfig {
    double h = 2.0;  // source height; also r0
    double delta = 0.0935;
    double edge = 0.075;
    double eps = 1e-4;
    double grid_spacing = 0.04;
    double standoff_diameters = 2.0;
    SolverKind solver = SolverKind::dense;
};

struct BumpReport {
    BumpConfig config;
    double r0 = 0, re = 0, standoff = 0;
    std::size_t n0 = 0, ne = 0;
    FieldGrid analytic;
    SolveOutcome inf, truncated, image;
};

inline BumpReport run_bump_experiment(const BumpConfig& cfg, const ProgressFn& progress = {}) {
    const BumpImages im(cfg.h);
    if (!(cfg.delta > 0.0)) throw DomainError("bump: delta must be positive");
    BumpReport rep;
    rep.config = cfg;
    rep.r0 = cfg.h;
    rep.re = cfg.h * (1.0 + cfg.delta);
    const DomainSpec dom{rep.r0, rep.re};
    auto mesh = std::make_shared<const PanelMesh>(make_bump_dip_mesh(1, rep.r0, rep.re, cfg.edge));
    rep.ne = mesh->size();
    rep.n0 = rep.ne - mesh->count(RegionTag::extension);
    rep.standoff = cfg.standoff_diameters * object_mean_diameter(*mesh);

    const double s = rep.standoff, r0 = rep.r0;
    const auto inside = [&](const Point3& y) { return y.norm() > 1.0 + s && y.norm() < r0 - s && y.z() > s; };
    const std::vector<Point3> pts = plane_grid(r0, 0.0, r0, cfg.grid_spacing, inside);
    const SurfacePredicate below = [](const Point3& y) { return y.z() < 0.0 || y.norm() < 1.0; };

    rep.analytic.points = pts;
    rep.analytic.label = "analytic";
    rep.analytic.below_surface.assign(pts.size(), false);
    for (const auto& y : pts) {
        const double v = analytic_bump_potential(y, cfg.h);
        rep.analytic.total.push_back(v);
        rep.analytic.induced.push_back(v - green(y, im.source));
    }

    BemConfig bc;
    bc.solver = cfg.solver;
    bc.prescribed_eps = cfg.eps;
    bc.p = choose_truncation(rep.r0, rep.re, cfg.eps);
    if (progress) progress("bump: BEMinf with " + std::to_string(rep.ne) + " panels, p = " + std::to_string(bc.p));
    rep.inf = detail::solve_and_sample(mesh, dom, bc, {{im.source, 1.0, true}}, pts, below, "BEMinf");
    rep.inf.eps2 = relative_l2_error(rep.inf.field.induced, rep.analytic.induced);

    bc.use_ground_kernel = false;
    if (progress) progress("bump: truncated BEM");
    rep.truncated = detail::solve_and_sample(mesh, dom, bc, {{im.source, 1.0, false}}, pts, below, "BEM");
    rep.truncated.eps2 = relative_l2_error(rep.truncated.field.induced, rep.analytic.induced);

    auto sphere = std::make_shared<const PanelMesh>(make_sphere_mesh(cfg.edge));
    if (progress) progress("bump: image BEM with " + std::to_string(sphere->size()) + " panels");
    rep.image = detail::solve_and_sample(sphere, DomainSpec{cfg.h, cfg.h}, bc,
                                         {{im.source, 1.0, false}, {im.mirror, -1.0, false}}, pts, below, "BEMimage");
    rep.image.eps2 = relative_l2_error(rep.image.field.induced, rep.analytic.induced);
    return rep;
}

// ---- dip benchmark ----

struct DipConfig {
    double h = 0.5;
    double edge = 0.1;
    double eps = 1e-4;
    std::vector<double> ratios{1.1, 1.124, 1.2, 1.3, 1.4, 1.5, 1.6, 1.75, 2.0};
    double gap_ratio = 1.124;
    double reference_ratio = 1.5;
    double reference_edge = 0.05;
    double reference_eps = 1e-6;
    double grid_spacing = 0.04;
    double standoff_diameters = 2.0;
    SolverKind solver = SolverKind::dense;
};

struct DipRow {
    double ratio = 0;
    SolveOutcome inf, truncated;
};

struct DipReport {
    DipConfig config;
    double standoff = 0;
    SolveOutcome reference;
    std::vector<DipRow> rows;
    double truncated_exponent = 0, truncated_constant = 0;  // eps2 ~ C (re/r0)^k
    double inf_spread = 0;                                  // max/min of the BEMinf curve
    double gap = 0;                                         // truncated / BEMinf at gap_ratio
};

// Least-squares slope and intercept of log y against log x.
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DomainError("loglog_fit: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    const double k = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {k, std::exp((sy - k * sx) / n)};
}

inline DipReport run_dip_experiment(const DipConfig& cfg, const ProgressFn& progress = {}) {
    if (!(std::abs(cfg.h) < 1.0) || cfg.h <= 0.0) throw DomainError("dip: source height must lie in (0, 1)");
    if (cfg.ratios.size() < 2) throw DomainError("dip: the sweep needs two or more ratios");
    DipReport rep;
    rep.config = cfg;
    const double r0 = 1.0;
    const Point3 xs(0, 0, cfg.h);
    const SurfacePredicate below = [](const Point3& y) { return y.z() < 0.0 && y.norm() > 1.0; };

    // the evaluation standoff follows the sweep meshes, the coarsest in play
    {
        const PanelMesh probe = make_bump_dip_mesh(-1, r0, r0 * cfg.ratios.front(), cfg.edge);
        rep.standoff = cfg.standoff_diameters * object_mean_diameter(probe);
    }
    const double s = rep.standoff;
    const std::vector<Point3> pts = plane_grid(r0, -r0, r0, cfg.grid_spacing, [&](const Point3& y) { return y.norm() < r0 - s; });

    {
        const double re = r0 * cfg.reference_ratio;
        auto mesh = std::make_shared<const PanelMesh>(make_bump_dip_mesh(-1, r0, re, cfg.reference_edge));
        BemConfig bc;
        bc.solver = cfg.solver;
        bc.prescribed_eps = cfg.reference_eps;
        bc.p = choose_truncation(r0, re, cfg.reference_eps);
        if (progress) progress("dip: reference with " + std::to_string(mesh->size()) + " panels, p = " + std::to_string(bc.p));
        rep.reference = detail::solve_and_sample(mesh, DomainSpec{r0, re}, bc, {{xs, 1.0, true}}, pts, below, "reference");
    }

    std::vector<double> x, yt, yi;
    for (double ratio : cfg.ratios) {
        const double re = r0 * ratio;
        auto mesh = std::make_shared<const PanelMesh>(make_bump_dip_mesh(-1, r0, re, cfg.edge));
        DipRow row;
        row.ratio = ratio;
        BemConfig bc;
        bc.solver = cfg.solver;
        bc.prescribed_eps = cfg.eps;
        bc.p = choose_truncation(r0, re, cfg.eps);
        if (progress) progress("dip: re/r0 = " + std::to_string(ratio) + ", " + std::to_string(mesh->size()) + " panels, p = " + std::to_string(bc.p));
        row.inf = detail::solve_and_sample(mesh, DomainSpec{r0, re}, bc, {{xs, 1.0, true}}, pts, below, "BEMinf");
        row.inf.eps2 = relative_l2_error(row.inf.field.induced, rep.reference.field.induced);
        bc.use_ground_kernel = false;
        row.truncated = detail::solve_and_sample(mesh, DomainSpec{r0, re}, bc, {{xs, 1.0, false}}, pts, below, "BEM");
        row.truncated.eps2 = relative_l2_error(row.truncated.field.induced, rep.reference.field.induced);
        x.push_back(ratio);
        yt.push_back(row.truncated.eps2);
        yi.push_back(row.inf.eps2);
        if (std::abs(ratio - cfg.gap_ratio) < 1e-12) rep.gap = row.truncated.eps2 / row.inf.eps2;
        rep.rows.push_back(std::move(row));
    }
    std::tie(rep.truncated_exponent, rep.truncated_constant) = loglog_fit(x, yt);
    rep.inf_spread = *std::max_element(yi.begin(), yi.end()) / *std::min_element(yi.begin(), yi.end());
    return rep;
}

// ---- measured cost of the factored kernel ----

struct CostCurveConfig {
    double eps = 1e-4;
    std::vector<double> ratios{1.2, 1.35, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0, 3.5, 4.0};
    int object_sources = 500;  // on the unit hemisphere, area 2 pi
    int receivers = 500;
    int repeats = 9;
    unsigned seed = 1;
};

struct CostCurvePoint {
    double ratio = 0;
    int p = 0;
    std::size_t sources = 0;
    double seconds = 0;
};

struct CostCurveReport {
    CostCurveConfig config;
    std::vector<CostCurvePoint> points;
    std::size_t argmin = 0;
    bool interior_minimum = false;
};

// Wall time to compute the kernel for every source-receiver pair through the factorization: the source
// signatures, the receiver bases and their product. Extension sources sit at the hemisphere's sampling density.
inline CostCurveReport measure_cost_curve(const CostCurveConfig& cfg, const ProgressFn& progress = {}) {
    CostCurveReport rep;
    rep.config = cfg;
    const double density = cfg.object_sources / (2.0 * pi);
    struct Case {
        int p;
        std::vector<Point3> src, rcv;
    };
    std::vector<Case> cases;
    for (double ratio : cfg.ratios) {
        if (!(ratio > 1.0)) throw DomainError("cost curve: ratios must exceed 1");
        Case cs;
        cs.p = choose_truncation(1.0, ratio, cfg.eps);
        const int ext = static_cast<int>(std::lround(density * pi * (ratio * ratio - 1.0)));
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < cfg.object_sources; ++k) {
            const double z = u(rng), a = 2 * pi * u(rng), s = std::sqrt(1 - z * z);
            cs.src.emplace_back(s * std::cos(a), s * std::sin(a), z);
        }
        for (int k = 0; k < ext; ++k) {
            const double rho = std::sqrt(1.0 + (ratio * ratio - 1.0) * u(rng)), a = 2 * pi * u(rng);
            cs.src.emplace_back(rho * std::cos(a), rho * std::sin(a), 0.0);
        }
        for (int k = 0; k < cfg.receivers; ++k) {
            const double z = u(rng), a = 2 * pi * u(rng), s = std::sqrt(1 - z * z);
            cs.rcv.emplace_back(s * std::cos(a), s * std::sin(a), z);
        }
        for (Point3& x : cs.src) x /= ratio;
        for (Point3& x : cs.rcv) x /= ratio;
        cases.push_back(std::move(cs));
    }
    // Repeats sweep all ratios in turn so slow spells on a shared machine hit every ratio alike.
    std::vector<double> best(cases.size(), std::numeric_limits<double>::infinity());
    for (int r = 0; r < cfg.repeats; ++r) {
        for (std::size_t k = 0; k < cases.size(); ++k) {
            const Case& cs = cases[k];
            const long S = static_cast<long>(cs.src.size()), M = static_cast<long>(cs.rcv.size());
            const auto t0 = std::chrono::steady_clock::now();
            const SpectralConstants c(cs.p);
            const NormalizedBasis basis(cs.p);
            const long P = harmonic_count(cs.p);
            Eigen::MatrixXd U(P, S), T(M, P);
            for (long j = 0; j < S; ++j) {
                const SourceSignature sig = source_signature(cs.src[j], c);
                U.col(j) = Eigen::Map<const Eigen::VectorXd>(sig.normalized_values().data(), P);
            }
            std::vector<double> t(P);
            for (long i = 0; i < M; ++i) {
                basis.evaluate(cs.rcv[i], t);
                T.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.data(), P);
            }
            const Eigen::MatrixXd K = T * U;
            const double sec = detail::seconds_since(t0);
            if (!K.allFinite()) throw SolverError("cost curve: non-finite kernel values", 0.0);
            best[k] = std::min(best[k], sec);
        }
    }
    for (std::size_t k = 0; k < cases.size(); ++k) {
        rep.points.push_back({cfg.ratios[k], cases[k].p, cases[k].src.size(), best[k]});
        if (progress)
            progress("cost curve: re/r0 = " + std::to_string(cfg.ratios[k]) + ", p = " + std::to_string(cases[k].p) + ", " +
                     std::to_string(best[k]) + " s");
    }
    for (std::size_t i = 1; i < rep.points.size(); ++i)
        if (rep.points[i].seconds < rep.points[rep.argmin].seconds) rep.argmin = i;
    rep.interior_minimum = rep.argmin > 0 && rep.argmin + 1 < rep.points.size();
    return rep;
}

}  // namespace holegf
