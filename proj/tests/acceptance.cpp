// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "holegf/bem_solver.hpp"
#include "holegf/experiments.hpp"
#include "holegf/ground_kernel.hpp"
#include "oracles.hpp"

using namespace holegf;

namespace {

// ---- pinned tolerances ----
constexpr double c1_eps = 1e-5, c1_factor = 3.0, c1_radius = 0.7;
constexpr int c1_pairs = 200;
constexpr double c2_tol = 1e-12;
constexpr int c2_pairs = 50;
constexpr int c3_max_degree = 25;
constexpr double c3_u_tol = 1e-8, c3_identity_tol = 1e-10;
constexpr double c4_tol = 1e-7;
constexpr int c4_pairs = 5;
constexpr double c5_factor = 3.0, c5_time_ratio = 4.0, c5_time_slack = 1.0;
constexpr int c5_p = 12, c5_timing_p = 20;
constexpr double c6_inf_lo = 1e-3, c6_inf_hi = 2e-2, c6_gap = 5.0, c6_seconds = 600.0;
constexpr double c7_gap = 10.0, c7_exponent = -3.0, c7_exponent_slack = 0.5, c7_spread = 3.0, c7_seconds = 1200.0;
constexpr double c8_eps = 1e-4, c8_pc = 11.56, c8_pc_tol = 0.01, c8_beta = 2.2255, c8_beta_tol = 1e-3;
constexpr double c8_alpha = 0.79681213;
constexpr double c9_eps = 1e-8, c9_eps_info = 1e-4;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Point3 random_in_ball(std::mt19937& rng, double rmax) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Point3 d(n(rng), n(rng), n(rng));
    return d.normalized() * rmax * std::cbrt(u(rng));
}

// 1: truncated series against the integral representation.
Outcome series_vs_integral() {
    KernelConfig cfg;
    cfg.p = choose_truncation(c1_radius, 1.0, c1_eps);
    const SpectralConstants c(cfg.p);
    std::mt19937 rng(2024);
    std::vector<double> s, ref;
    for (int i = 0; i < c1_pairs; ++i) {
        const Point3 y = random_in_ball(rng, c1_radius), x = random_in_ball(rng, c1_radius);
        ref.push_back(kernel_integral(y, x, cfg));
        s.push_back(kernel_series(y, source_signature(x, c), cfg));
    }
    const double e = relative_l2_error(s, ref);
    return {e <= c1_factor * c1_eps, fmt("p = %d, eps2 = %.3e (limit %.1e)", cfg.p, e, c1_factor * c1_eps)};
}

// 2: the kernel vanishes on the plane inside the hole and is odd in the receiver height.
Outcome plane_vanishing() {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_zero = 0.0, worst_flip = 0.0;
    for (double R : {1.0, 2.5}) {
        KernelConfig cfg;
        cfg.scale_radius = R;
        cfg.p = 30;
        const double scale = 1.0 / R;
        for (int i = 0; i < c2_pairs; ++i) {
            const double rho = 0.95 * R * std::sqrt(u(rng)), a = 2 * pi * u(rng);
            const Point3 y0(rho * std::cos(a), rho * std::sin(a), 0.0);
            const Point3 x = random_in_ball(rng, 0.9 * R);
            for (auto path : {KernelPath::series, KernelPath::integral})
                worst_zero = std::max(worst_zero, std::abs(kernel_dirichlet(y0, x, cfg, path)) / scale);
            Point3 y = random_in_ball(rng, 0.9 * R);
            const double k = kernel_dirichlet(y, x, cfg, KernelPath::integral);
            const double km = kernel_dirichlet(mirror_z(y), x, cfg, KernelPath::integral);
            worst_flip = std::max(worst_flip, std::abs(k + km) / scale);
        }
    }
    return {worst_zero <= c2_tol && worst_flip <= c2_tol,
            fmt("max |K| on plane = %.2e, max |K(y) + K(y mirrored)| = %.2e (limit %.0e x 1/R)", worst_zero, worst_flip, c2_tol)};
}

// 3: radial integrals against direct quadrature, plus two identities among them.
Outcome radial_integrals() {
    double worst_u = 0.0, worst_rep = 0.0, worst_rec = 0.0;
    int count = 0;
    for (double xi : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95}) {
        const RadialTable t(xi, c3_max_degree - 1, c3_max_degree);
        for (int m = 0; m < c3_max_degree; ++m)
            for (int n = m + 1; n <= c3_max_degree; n += 2) {
                const double ref = oracle::u_quadrature(n, m, xi);
                worst_u = std::max(worst_u, std::abs(t.u(n, m) - ref) / std::abs(ref));
                ++count;
            }
        // u written two ways: directly, and through v after an integration by parts
        for (int m = 1; m < c3_max_degree - 2; ++m)
            for (int n = m + 1; n + 2 <= t.max_degree(m + 1) && n + 2 <= t.max_degree(m); n += 2) {
                const double s = t.u(n + 1, m - 1) + t.u(n + 1, m + 1);
                const double a1 = t.u(n, m) + xi * xi * t.u(n + 2, m) - xi * s;
                const double a2 = (t.v(m) - xi * xi * t.u(n + 2, m) + 0.5 * xi * s) / (n + 1.0);
                worst_rep = std::max(worst_rep, std::abs(a1 - a2) / std::max(1.0, std::abs(a1)));
            }
        // three-term recurrence in m for w, on independent quadrature values
        for (int m = 2; m <= c3_max_degree; ++m) {
            const double w0 = oracle::w_heine(m - 2, xi), w1 = oracle::w_heine(m - 1, xi), w2 = oracle::w_heine(m, xi);
            const double r = w2 - ((m - 1) * (1 + xi * xi) / xi * w1 - (2 * m - 3) / 2.0 * (w2 + w0));
            worst_rec = std::max(worst_rec, std::abs(r));
        }
    }
    return {worst_u <= c3_u_tol && worst_rep <= c3_identity_tol && worst_rec <= c3_identity_tol,
            fmt("%d values, max rel err %.2e (limit %.0e); identity residuals %.2e, %.2e (limit %.0e)", count, worst_u,
                c3_u_tol, worst_rep, worst_rec, c3_identity_tol)};
}

// 4: Neumann/Dirichlet duality: the library's K^D(x,y) on both paths against an independent layer
// integral for K^N(y,x).
Outcome neumann_duality() {
    std::mt19937 rng(11);
    KernelConfig cfg;
    cfg.p = 40;
    double worst_dual = 0.0, worst_lib = 0.0;
    for (int i = 0; i < c4_pairs; ++i) {
        Point3 y = random_in_ball(rng, 0.6), x = random_in_ball(rng, 0.6);
        y.z() = std::abs(y.z()) + 0.05;
        x.z() = std::abs(x.z()) + 0.05;
        const double kn = oracle::neumann_layer(y, x, 2e3);
        for (auto path : {KernelPath::series, KernelPath::integral})
            worst_dual = std::max(worst_dual, std::abs(kn + kernel_dirichlet(x, y, cfg, path)) / std::abs(kn));
        worst_lib = std::max(worst_lib, std::abs(kernel_neumann(y, x, cfg) - kn) / std::abs(kn));
    }
    return {worst_dual <= c4_tol && worst_lib <= c4_tol,
            fmt("max rel |K^N(y,x) + K^D(x,y)| = %.2e over both paths, K^N vs layer integral %.2e (limit %.0e)", worst_dual,
                worst_lib, c4_tol)};
}

// 5: factored kernel against the densified integral operator, and linear matvec cost.
Outcome factored_kernel() {
    const DomainSpec dom{2.0, 3.0};
    auto mesh = std::make_shared<const PanelMesh>(make_bump_dip_mesh(1, dom.r0, dom.re, 0.6));
    BemConfig cfg;
    cfg.p = c5_p;
    cfg.prescribed_eps = 0.5;
    const BemSystem sys = assemble(mesh, dom, cfg);
    const Eigen::MatrixXd K = sys.dense_kernel_matrix(KernelPath::integral);
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd v(sys.size());
        for (auto& x : v) x = nd(rng);
        const Eigen::VectorXd ref = K * v;
        worst = std::max(worst, (sys.apply_kernel(v) - ref).norm() / ref.norm());
    }
    const double bound = c5_factor * std::pow(dom.r0 / dom.re, cfg.p);

    // the timing truncation puts both factor sets beyond the caches, so the ratio measures memory traffic alone
    auto factors = [](double edge) {
        return assemble_kernel_factors(make_bump_dip_mesh(1, 2.0, 2.4, edge), DomainSpec{2.0, 2.4}, c5_timing_p);
    };
    const KernelFactors f1 = factors(0.05), f4 = factors(0.025);
    const std::size_t n1 = static_cast<std::size_t>(f1.source.cols()), n4 = static_cast<std::size_t>(f4.source.cols());
    const Eigen::VectorXd v1 = Eigen::VectorXd::Ones(static_cast<long>(n1)), v4 = Eigen::VectorXd::Ones(static_cast<long>(n4));
    double t1 = 1e300, t4 = 1e300, sink = 0.0;
    for (int r = 0; r < 30; ++r) {  // alternate so both sizes see the same machine state
        auto t0 = Clock::now();
        sink += f1.apply(v1)[0];
        t1 = std::min(t1, since(t0));
        t0 = Clock::now();
        sink += f4.apply(v4)[0];
        t4 = std::min(t4, since(t0));
    }
    if (!std::isfinite(sink)) t4 = 1e300;
    const double ratio = t4 / t1;
    return {worst <= bound && std::abs(ratio - c5_time_ratio) <= c5_time_slack,
            fmt("%zu panels: rel err %.2e (limit %.2e); matvec %zu -> %zu panels (x%.2f): time ratio %.2f (limit %.0f +- %.0f)",
                mesh->size(), worst, bound, n1, n4, double(n4) / n1, ratio, c5_time_ratio, c5_time_slack)};
}

// 6: bump above a ground plane against the analytic image solution.
Outcome bump() {
    const auto t0 = Clock::now();
    const BumpReport r = run_bump_experiment(BumpConfig{});
    const double sec = since(t0);
    const double inf = r.inf.eps2, tr = r.truncated.eps2, im = r.image.eps2;
    const bool in_band = inf >= c6_inf_lo && inf <= c6_inf_hi;
    const bool gap = tr >= c6_gap * inf, image = im <= inf, fast = sec <= c6_seconds;
    return {in_band && gap && image && fast,
            fmt("N0 = %zu, Ne = %zu, p = %d: BEMinf %.3e [%s in %.0e..%.0e], BEM %.3e [%s >= %.0fx], image %.3e [%s <= BEMinf], "
                "%.0f s [%s <= %.0f s]",
                r.n0, r.ne, r.inf.p, inf, in_band ? "ok" : "no", c6_inf_lo, c6_inf_hi, tr, gap ? "ok" : "no", c6_gap, im,
                image ? "ok" : "no", sec, fast ? "ok" : "no", c6_seconds)};
}

// 7: dip below the ground plane; sweep of the extension radius.
Outcome dip() {
    const auto t0 = Clock::now();
    const DipReport r = run_dip_experiment(DipConfig{});
    const double sec = since(t0);
    const bool gap = r.gap >= c7_gap;
    const bool slope = std::abs(r.truncated_exponent - c7_exponent) <= c7_exponent_slack;
    const bool flat = r.inf_spread <= c7_spread, fast = sec <= c7_seconds;
    return {gap && slope && flat && fast,
            fmt("gap at delta 0.124 = %.1f [%s >= %.0f], BEM exponent %.2f [%s %.0f +- %.1f], BEMinf max/min %.2f [%s <= %.0f], "
                "%.0f s [%s <= %.0f s]",
                r.gap, gap ? "ok" : "no", c7_gap, r.truncated_exponent, slope ? "ok" : "no", c7_exponent, c7_exponent_slack,
                r.inf_spread, flat ? "ok" : "no", c7_spread, sec, fast ? "ok" : "no", c7_seconds)};
}

// 8: critical truncation order and ratio of the cost model.
Outcome cost_constants() {
    const double alpha = solve_alpha_star();
    const double pc = CostModel::p_c(c8_eps), beta = CostModel::beta();
    const bool alpha_ok = std::abs(alpha - c8_alpha) <= 1e-8 && std::abs(CostModel::alpha_star - c8_alpha) <= 1e-12;
    const bool pc_ok = std::abs(pc - c8_pc) <= c8_pc_tol;
    const bool beta_ok = std::abs(beta - c8_beta) <= c8_beta_tol;
    const double lo = CostModel::crossover_bracket(std::floor(pc), c8_eps), hi = CostModel::crossover_bracket(std::ceil(pc), c8_eps);
    const bool straddle = lo < 0.0 && hi > 0.0;
    return {alpha_ok && pc_ok && beta_ok && straddle,
            fmt("alpha* = %.8f [%s], p_c = %.4f [%s %.2f +- %.2f], beta = exp(alpha*) = %.4f [%s %.4f +- %.0e], "
                "bracket %.3e at p = %.0f, %.3e at p = %.0f [%s]",
                alpha, alpha_ok ? "ok" : "no", pc, pc_ok ? "ok" : "no", c8_pc, c8_pc_tol, beta, beta_ok ? "ok" : "no", c8_beta,
                c8_beta_tol, lo, std::floor(pc), hi, std::ceil(pc), straddle ? "ok" : "no")};
}

// 9: measured cost of the factored kernel has an interior minimum in re/r0. The pinned
// accuracy is c9_eps; the c9_eps_info curve is flat within noise over [3, 4] and is shown only.
Outcome cost_curve() {
    auto curve = [](double eps) {
        CostCurveConfig cfg;
        cfg.eps = eps;
        const CostCurveReport r = measure_cost_curve(cfg);
        std::string pts;
        for (const auto& p : r.points) pts += fmt(" %.2f:%.2es", p.ratio, p.seconds);
        return std::pair{r, fmt("eps %.0e argmin re/r0 = %.2f;", eps, r.points.at(r.argmin).ratio) + pts};
    };
    const auto [r, pinned] = curve(c9_eps);
    const auto [ri, info] = curve(c9_eps_info);
    return {r.interior_minimum, pinned + " | info " + info};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"series vs integral kernel", series_vs_integral},
        {"kernel vanishes on the hole plane", plane_vanishing},
        {"radial integrals and identities", radial_integrals},
        {"Neumann/Dirichlet duality", neumann_duality},
        {"factored vs densified kernel", factored_kernel},
        {"bump benchmark", bump},
        {"dip benchmark", dip},
        {"cost-model constants", cost_constants},
        {"measured cost curve minimum", cost_curve},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(), since(t0));
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
