#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "holegf/bem_solver.hpp"
#include "holegf/experiments.hpp"
#include "holegf/ground_kernel.hpp"
#include "holegf/surface_mesh.hpp"

using namespace holegf;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Bad flags, unreadable inputs or unwritable outputs; exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr int exit_ok = 0, exit_usage = 1, exit_numeric = 2;

Point3 parse_point(const std::string& text, const char* flag) {
    std::vector<double> c;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (item.empty() || used != item.size() || !std::isfinite(v))
            throw UsageError(std::string(flag) + ": expected three comma-separated numbers, got '" + text + "'");
        c.push_back(v);
    }
    if (c.size() != 3) throw UsageError(std::string(flag) + ": expected three comma-separated numbers, got '" + text + "'");
    return {c[0], c[1], c[2]};
}

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

// %.17g keeps the text a faithful, reproducible copy of the double.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw UsageError("output directory '" + dir + "' cannot be created");
    const fs::path probe = fs::path(dir) / ".holegf-write-test";
    {
        std::ofstream os(probe);
        if (!os) throw UsageError("output directory '" + dir + "' is not writable");
    }
    fs::remove(probe, ec);
    return dir;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write '" + path.string() + "'");
    os << j.dump(2) << "\n";
}

SolverKind parse_solver(const std::string& s) { return s == "iterative" ? SolverKind::iterative : SolverKind::dense; }

json outcome_json(const SolveOutcome& o) {
    return {{"eps2", o.eps2},          {"p", o.p},
            {"panels", o.panels},      {"relative_residual", o.relative_residual},
            {"seconds", o.seconds},    {"warnings", o.warnings}};
}

// Domain radii read off a mesh: the extension ring spans [r0, re] on z = 0.
DomainSpec infer_domain(const PanelMesh& mesh) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, outer = 0.0;
    for (std::size_t j = 0; j < mesh.size(); ++j)
        for (const auto& v : mesh.panel(j).vertices) {
            const double rho = cylindrical_radius(v);
            outer = std::max(outer, v.norm());
            if (mesh.tag(j) != RegionTag::extension) continue;
            lo = std::min(lo, rho);
            hi = std::max(hi, rho);
        }
    if (hi == 0.0) return {outer, outer};
    return {lo, hi};
}

struct Globals {
    int threads = 0;
    unsigned seed = 1;
    std::string out_dir;
};

// ---- kernel ----

struct KernelArgs {
    std::string y, x, path = "auto";
    double r = 1.0, tol = 1e-10;
    int p = 40;
    bool neumann = false;
};

int run_kernel(const KernelArgs& a) {
    const Point3 y = parse_point(a.y, "--y"), x = parse_point(a.x, "--x");
    KernelConfig cfg;
    cfg.scale_radius = a.r;
    cfg.p = a.p;
    cfg.integral_tolerance = a.tol;
    cfg.validate();
    const KernelPath path = a.path == "series" ? KernelPath::series
                            : a.path == "integral" ? KernelPath::integral
                                                   : KernelPath::automatic;
    const double value = a.neumann ? kernel_neumann(y, x, cfg, path) : kernel_dirichlet(y, x, cfg, path);
    // series truncation error relative to 1/R; the integral path reports its quadrature tolerance
    const double rho = std::max(y.norm(), x.norm()) / a.r;
    const double series_bound = std::pow(rho, a.p) / a.r;
    json j = {{"variant", a.neumann ? "neumann" : "dirichlet"},
              {"path", a.path},
              {"y", point_json(y)},
              {"x", point_json(x)},
              {"r", a.r},
              {"p", a.p},
              {"value", value},
              {"series_bound", series_bound},
              {"integral_tolerance", a.tol / a.r}};
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

// ---- mesh ----

struct MeshArgs {
    std::string kind = "bump", out;
    double r0 = 0, re = 0, edge = 0.1;
};

int run_mesh(const MeshArgs& a, const Globals& g) {
    PanelMesh mesh = [&] {
        if (a.kind == "bump" || a.kind == "dip") {
            const int sign = a.kind == "bump" ? 1 : -1;
            const double r0 = a.r0 > 0 ? a.r0 : (sign > 0 ? 2.0 : 1.0);
            const double re = a.re > 0 ? a.re : r0 * 1.0935;
            return make_bump_dip_mesh(sign, r0, re, a.edge);
        }
        if (a.kind == "disk") return make_disk_mesh(a.re > 0 ? a.re : 4.0, a.edge);
        return make_sphere_mesh(a.edge);
    }();
    const fs::path out = a.out.empty() ? prepare_dir(g.out_dir) / (a.kind + ".mesh") : fs::path(a.out);
    try {
        save_mesh(mesh, out.string());
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    json j = {{"mesh", out.string()}, {"kind", a.kind}, {"panels", mesh.size()}, {"vertices", mesh.vertices().size()}};
    for (const auto& [tag, n] : mesh.tag_histogram()) j["tags"][tag_name(tag)] = n;
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

// ---- solve ----

struct SolveArgs {
    std::string mesh, source, solver = "dense", name = "solve";
    double eps = 1e-4, r0 = 0, re = 0, grid = 0;
    int p = 0;
    bool no_kernel = false;
};

int run_solve(const SolveArgs& a, const Globals& g) {
    const Point3 xs = parse_point(a.source, "--source");
    const fs::path dir = prepare_dir(g.out_dir);
    auto mesh = std::make_shared<const PanelMesh>(load_mesh(a.mesh));
    DomainSpec dom = infer_domain(*mesh);
    if (a.r0 > 0) dom.r0 = a.r0;
    if (a.re > 0) dom.re = a.re;
    BemConfig bc;
    bc.solver = parse_solver(a.solver);
    bc.prescribed_eps = a.eps;
    bc.use_ground_kernel = !a.no_kernel;
    if (bc.use_ground_kernel) {
        if (!(dom.re > dom.r0))
            throw UsageError("mesh '" + a.mesh + "' has no extension ring; pass --r0/--re or --no-kernel");
        bc.p = a.p > 0 ? a.p : choose_truncation(dom.r0, dom.re, a.eps);
    }
    BemSystem sys = assemble(mesh, dom, bc);
    sys.set_point_sources({{xs, 1.0, bc.use_ground_kernel}});
    const SolveReport r = solve(sys);

    const fs::path sol = dir / (a.name + "_solution.csv");
    write_solution_csv(*mesh, r.sigma, sol.string());
    json j = {{"mesh", a.mesh},
              {"source", point_json(xs)},
              {"r0", dom.r0},
              {"re", dom.re},
              {"delta", dom.delta()},
              {"ground_kernel", bc.use_ground_kernel},
              {"p", bc.use_ground_kernel ? bc.p : 0},
              {"eps", a.eps},
              {"solver", a.solver},
              {"panels", mesh->size()},
              {"relative_residual", r.relative_residual},
              {"condition_estimate", r.condition_estimate},
              {"iterations", r.iterations},
              {"warnings", sys.warnings()},
              {"solution_csv", sol.string()}};
    if (a.grid > 0) {
        const double lim = bc.use_ground_kernel ? dom.re : 2.0 * dom.re;
        const auto inside = [&](const Point3& y) { return y.norm() < lim * (1.0 - 1e-9); };
        const std::vector<Point3> pts = plane_grid(lim, -lim, lim, a.grid, inside);
        const PanelMesh& m = *mesh;
        const FieldGrid f = evaluate_field(sys, r.sigma, pts, [&m](const Point3& y) { return m.is_below(y); }, "field");
        const fs::path fp = dir / (a.name + "_field.csv");
        write_field_csv(f, fp.string());
        j["field_csv"] = fp.string();
        j["field_points"] = pts.size();
    }
    write_json(j, dir / (a.name + "_report.json"));
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

// ---- experiments ----

struct ExperimentArgs {
    std::string solver = "dense";
    double h = 0, eps = 1e-4, delta = 0.0935, edge = 0, grid = 0.04;
    std::vector<double> ratios;
    std::vector<int> p_values;
    int receivers = 0, sources = 0, repeats = 0;
};

std::string stem(const std::string& id, const Globals& g) { return id + "_seed" + std::to_string(g.seed); }

void write_field_table(const std::vector<const FieldGrid*>& grids, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write '" + path.string() + "'");
    os << "x,y,z";
    for (const auto* g : grids) os << "," << g->label;
    os << "\n";
    const auto& pts = grids.front()->points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        os << num(pts[i].x()) << "," << num(pts[i].y()) << "," << num(pts[i].z());
        for (const auto* g : grids) os << "," << num(g->induced[i]);
        os << "\n";
    }
}

const ProgressFn progress = [](const std::string& s) { std::cerr << s << std::endl; };

int run_bump(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    BumpConfig cfg;
    if (a.h > 0) cfg.h = a.h;
    cfg.eps = a.eps;
    cfg.delta = a.delta;
    if (a.edge > 0) cfg.edge = a.edge;
    cfg.grid_spacing = a.grid;
    cfg.solver = parse_solver(a.solver);
    const BumpReport r = run_bump_experiment(cfg, progress);
    const std::string s = stem("bump", g);
    write_field_table({&r.analytic, &r.inf.field, &r.truncated.field, &r.image.field}, dir / (s + "_field.csv"));
    json j = {{"experiment", "bump"},
              {"seed", g.seed},
              {"config",
               {{"h", cfg.h}, {"delta", cfg.delta}, {"edge", cfg.edge}, {"eps", cfg.eps},
                {"grid_spacing", cfg.grid_spacing}, {"standoff_diameters", cfg.standoff_diameters}, {"solver", a.solver}}},
              {"r0", r.r0},
              {"re", r.re},
              {"standoff", r.standoff},
              {"n0", r.n0},
              {"ne", r.ne},
              {"grid_points", r.analytic.points.size()},
              {"BEMinf", outcome_json(r.inf)},
              {"BEM", outcome_json(r.truncated)},
              {"image", outcome_json(r.image)},
              {"field_csv", (dir / (s + "_field.csv")).string()}};
    write_json(j, dir / (s + ".json"));
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

int run_dip(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    DipConfig cfg;
    if (a.h > 0) cfg.h = a.h;
    cfg.eps = a.eps;
    if (a.edge > 0) cfg.edge = a.edge;
    if (!a.ratios.empty()) cfg.ratios = a.ratios;
    cfg.grid_spacing = a.grid;
    cfg.solver = parse_solver(a.solver);
    const DipReport r = run_dip_experiment(cfg, progress);
    const std::string s = stem("dip", g);
    {
        std::ofstream os(dir / (s + "_sweep.csv"));
        if (!os) throw UsageError("cannot write the sweep table");
        os << "ratio,delta,p,panels,eps2_BEMinf,eps2_BEM\n";
        for (const auto& row : r.rows)
            os << num(row.ratio) << "," << num(row.ratio - 1.0) << "," << row.inf.p << "," << row.inf.panels << ","
               << num(row.inf.eps2) << "," << num(row.truncated.eps2) << "\n";
    }
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back({{"ratio", row.ratio}, {"BEMinf", outcome_json(row.inf)}, {"BEM", outcome_json(row.truncated)}});
    json j = {{"experiment", "dip"},
              {"seed", g.seed},
              {"config", {{"h", cfg.h}, {"edge", cfg.edge}, {"eps", cfg.eps}, {"ratios", cfg.ratios},
                          {"reference_ratio", cfg.reference_ratio}, {"reference_edge", cfg.reference_edge},
                          {"reference_eps", cfg.reference_eps}, {"grid_spacing", cfg.grid_spacing}, {"solver", a.solver}}},
              {"standoff", r.standoff},
              {"reference", outcome_json(r.reference)},
              {"rows", rows},
              {"truncated_exponent", r.truncated_exponent},
              {"truncated_constant", r.truncated_constant},
              {"inf_spread", r.inf_spread},
              {"gap", r.gap},
              {"sweep_csv", (dir / (s + "_sweep.csv")).string()}};
    write_json(j, dir / (s + ".json"));
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

int run_accuracy_map(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    AccuracyMapConfig cfg;
    cfg.ratios = a.ratios.empty() ? std::vector<double>{1.2, 1.5, 2.0, 3.0} : a.ratios;
    cfg.p_values = a.p_values.empty() ? std::vector<int>{4, 8, 12, 16, 24, 32} : a.p_values;
    if (a.receivers > 0) cfg.receivers = a.receivers;
    if (a.sources > 0) cfg.sources = a.sources;
    cfg.seed = g.seed;
    const auto cells = accuracy_map(cfg, progress);
    const std::string s = stem("accuracy-map", g);
    json jc = json::array();
    {
        std::ofstream os(dir / (s + ".csv"));
        if (!os) throw UsageError("cannot write the accuracy table");
        os << "ratio,p,eps2,bound\n";
        for (const auto& c : cells) {
            const double bound = std::pow(c.ratio, -c.p);
            os << num(c.ratio) << "," << c.p << "," << num(c.eps2) << "," << num(bound) << "\n";
            jc.push_back({{"ratio", c.ratio}, {"p", c.p}, {"eps2", c.error.empty() ? json(c.eps2) : json(nullptr)},
                          {"bound", bound}, {"error", c.error}});
        }
    }
    json j = {{"experiment", "accuracy-map"},
              {"seed", g.seed},
              {"config", {{"ratios", cfg.ratios}, {"p_values", cfg.p_values}, {"receivers", cfg.receivers},
                          {"sources", cfg.sources}, {"reference_tolerance", cfg.reference_tolerance}}},
              {"cells", jc},
              {"csv", (dir / (s + ".csv")).string()}};
    write_json(j, dir / (s + ".json"));
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

int run_cost_curve(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    CostCurveConfig cfg;
    cfg.eps = a.eps;
    if (!a.ratios.empty()) cfg.ratios = a.ratios;
    if (a.sources > 0) cfg.object_sources = a.sources;
    if (a.receivers > 0) cfg.receivers = a.receivers;
    if (a.repeats > 0) cfg.repeats = a.repeats;
    cfg.seed = g.seed;
    const CostCurveReport r = measure_cost_curve(cfg, progress);
    const std::string s = stem("cost-curve", g);
    json pts = json::array();
    {
        std::ofstream os(dir / (s + ".csv"));
        if (!os) throw UsageError("cannot write the cost table");
        os << "ratio,p,sources,seconds\n";
        for (const auto& p : r.points) {
            os << num(p.ratio) << "," << p.p << "," << p.sources << "," << num(p.seconds) << "\n";
            pts.push_back({{"ratio", p.ratio}, {"p", p.p}, {"sources", p.sources}, {"seconds", p.seconds}});
        }
    }
    json j = {{"experiment", "cost-curve"},
              {"seed", g.seed},
              {"config", {{"eps", cfg.eps}, {"ratios", cfg.ratios}, {"object_sources", cfg.object_sources},
                          {"receivers", cfg.receivers}, {"repeats", cfg.repeats}}},
              {"points", pts},
              {"argmin_ratio", r.points.at(r.argmin).ratio},
              {"interior_minimum", r.interior_minimum},
              {"alpha_star", CostModel::alpha_star},
              {"beta", CostModel::beta()},
              {"p_c", CostModel::p_c(cfg.eps)},
              {"csv", (dir / (s + ".csv")).string()}};
    write_json(j, dir / (s + ".json"));
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green's functions for a ground plane with a circular hole: kernels, meshes, BEM solves, experiments"};
    app.require_subcommand(1);
    Globals g;
    if (const char* env = std::getenv("HOLEGF_OUTPUT_DIR")) g.out_dir = env;
    if (g.out_dir.empty()) g.out_dir = ".";
    app.add_option("--threads", g.threads, "Cap on worker threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "Seed for randomized layouts; part of every experiment file name");
    app.add_option("--out-dir", g.out_dir, "Output directory (default: $HOLEGF_OUTPUT_DIR or .)");

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "Evaluate the Dirichlet or Neumann kernel at one pair of points");
    kernel->add_option("--y", ka.y, "Receiver point x,y,z")->required();
    kernel->add_option("--x", ka.x, "Source point x,y,z")->required();
    kernel->add_option("--r", ka.r, "Hole radius")->capture_default_str();
    kernel->add_option("--p", ka.p, "Series truncation order")->capture_default_str()->check(CLI::Range(2, 400));
    kernel->add_option("--path", ka.path, "Evaluation path")->check(CLI::IsMember({"series", "integral", "auto"}))->capture_default_str();
    kernel->add_flag("--neumann", ka.neumann, "Neumann variant K^N(y,x) = -K^D(x,y)");
    kernel->add_option("--tol", ka.tol, "Quadrature tolerance of the integral path")->capture_default_str();

    MeshArgs ma;
    auto* mesh = app.add_subcommand("mesh", "Generate a panel mesh in the holegf-mesh text format");
    mesh->add_option("--kind", ma.kind, "Geometry")->check(CLI::IsMember({"bump", "dip", "disk", "sphere"}))->capture_default_str();
    mesh->add_option("--r0", ma.r0, "Radius of the detailed region (bump default 2, dip default 1)");
    mesh->add_option("--re", ma.re, "Extension radius (default 1.0935 r0; disk radius, default 4)");
    mesh->add_option("--edge", ma.edge, "Target edge length")->capture_default_str();
    mesh->add_option("--out", ma.out, "Mesh file (default <out-dir>/<kind>.mesh)");

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the BEM system for a unit point charge above a mesh");
    solve_cmd->add_option("--mesh", sa.mesh, "Mesh file")->required();
    solve_cmd->add_option("--source", sa.source, "Charge position x,y,z")->required();
    solve_cmd->add_option("--eps", sa.eps, "Prescribed kernel accuracy; sets p when --p is absent")->capture_default_str();
    solve_cmd->add_option("--r0", sa.r0, "Override the inner extension radius read from the mesh");
    solve_cmd->add_option("--re", sa.re, "Override the outer extension radius read from the mesh");
    solve_cmd->add_option("--p", sa.p, "Kernel truncation order")->check(CLI::Range(2, 400));
    solve_cmd->add_flag("--no-kernel", sa.no_kernel, "Plain truncated BEM without the ground kernel");
    solve_cmd->add_option("--solver", sa.solver, "Linear solver")->check(CLI::IsMember({"dense", "iterative"}))->capture_default_str();
    solve_cmd->add_option("--grid", sa.grid, "Spacing of an xz field grid (0: no grid)")->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--name", sa.name, "Prefix of the output files")->capture_default_str();

    ExperimentArgs ea;
    std::string which;
    auto* exp = app.add_subcommand("experiment", "Run a named benchmark and write JSON and CSV reports");
    exp->set_help_flag("--help", "Print this help message and exit");  // --h is the source height
    exp->add_option("name", which, "Experiment")->required()->check(CLI::IsMember({"bump", "dip", "accuracy-map", "cost-curve"}));
    exp->add_option("--h", ea.h, "Source height (bump default 2, dip default 0.5)");
    exp->add_option("--eps", ea.eps, "Prescribed kernel accuracy")->capture_default_str();
    exp->add_option("--delta", ea.delta, "Bump extension delta = re/r0 - 1")->capture_default_str();
    exp->add_option("--edge", ea.edge, "Target edge length (bump default 0.075, dip default 0.1)");
    exp->add_option("--grid", ea.grid, "Evaluation grid spacing")->capture_default_str();
    exp->add_option("--ratios", ea.ratios, "re/r0 values (dip, accuracy-map, cost-curve)")->delimiter(',');
    exp->add_option("--p-values", ea.p_values, "Truncation orders (accuracy-map)")->delimiter(',');
    exp->add_option("--receivers", ea.receivers, "Receiver count (accuracy-map, cost-curve)");
    exp->add_option("--sources", ea.sources, "Source count (accuracy-map, cost-curve)");
    exp->add_option("--repeats", ea.repeats, "Timing repeats (cost-curve, default 9)");
    exp->add_option("--solver", ea.solver, "Linear solver")->check(CLI::IsMember({"dense", "iterative"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

#ifdef _OPENMP
    if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

    try {
        if (*kernel) return run_kernel(ka);
        if (*mesh) return run_mesh(ma, g);
        if (*solve_cmd) return run_solve(sa, g);
        const fs::path dir = prepare_dir(g.out_dir);
        if (which == "bump") return run_bump(ea, g, dir);
        if (which == "dip") return run_dip(ea, g, dir);
        if (which == "accuracy-map") return run_accuracy_map(ea, g, dir);
        return run_cost_curve(ea, g, dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const MeshError& e) {
        std::cerr << "mesh error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const QuadratureError& e) {
        std::cerr << "quadrature error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << " (condition estimate " << e.condition_estimate() << ")\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
}
