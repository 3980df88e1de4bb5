#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/IterativeSolvers>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "holegf/errors.hpp"
#include "holegf/geometry.hpp"
#include "holegf/ground_kernel.hpp"
#include "holegf/harmonics.hpp"
#include "holegf/surface_mesh.hpp"

namespace holegf {

namespace detail {

// Edge primitive of the single-layer integral: y is the height above the panel plane, z the
// signed in-plane distance from the edge line, x the coordinate along the edge.
inline double edge_h(double x, double y, double z) {
    const double r = std::sqrt(x * x + y * y + z * z);
    double angular = 0.0;
    if (z != 0.0 && y != 0.0) angular = y * (std::atan(x / z) - std::atan(y * x / (z * r)));
    double log_term = 0.0;
    if (z != 0.0) {
        // r + x loses all digits for x << 0; use (y^2 + z^2)/(r - x) there
        const double rpx = x >= 0.0 ? r + x : (y * y + z * z) / (r - x);
        log_term = z * std::log(std::abs(rpx));
    }
    return angular - log_term;
}

}  // namespace detail

// Integral of G(y, x) over a flat triangular panel, exact.
inline double triangle_single_layer(const Panel& panel, const Point3& y) {
    const double h = std::abs((y - panel.vertices[0]).dot(panel.normal));
    double s = 0.0;
    for (int q = 0; q < 3; ++q) {
        const Point3 d = y - panel.vertices[q];
        const double xq = d.dot(panel.tangent[q]);
        const double zq = d.dot(panel.edge_normal[q]);
        s += detail::edge_h(panel.length[q] - xq, h, zq) - detail::edge_h(-xq, h, zq);
    }
    return s / (4.0 * pi);
}

enum class SolverKind { dense, iterative };

struct BemConfig {
    int p = 12;
    double nearfield_radius = 0.0;  // 0: five mean panel diameters
    SolverKind solver = SolverKind::dense;
    double iterative_tolerance = 1e-10;
    int max_iterations = 2000;
    double prescribed_eps = 1e-4;
    bool use_ground_kernel = true;

    void validate() const {
        if (!(nearfield_radius >= 0.0)) throw DomainError("BemConfig: nearfield_radius must be >= 0");
        if (!(prescribed_eps > 0.0 && prescribed_eps < 1.0)) throw DomainError("BemConfig: prescribed_eps must lie in (0,1)");
        if (use_ground_kernel && p < 2) throw DomainError("BemConfig: p must be >= 2");
        if (!(iterative_tolerance > 0.0)) throw DomainError("BemConfig: iterative_tolerance must be positive");
    }
};

struct PointCharge {
    Point3 position;
    double strength = 1.0;
    bool with_ground_kernel = true;  // also carries the K^(D) image term
};

// Rows/columns of the low-rank kernel factors: (n, m) with n + m odd, |m| < n < p.
inline std::vector<int> active_harmonics(int p) {
    std::vector<int> idx;
    for (int n = 1; n < p; ++n)
        for (int m = -(n - 1); m <= n - 1; ++m)
            if ((n + m) % 2) idx.push_back(harmonic_index(n, m));
    return idx;
}

// Low-rank ground-kernel factors: kernel term of row i, column j is receiver(i,:) . source(:,j).
struct KernelFactors {
    Eigen::MatrixXd receiver;  // T_n^m(y_i / re) over active harmonics; zero rows at extension panels
    Eigen::MatrixXd source;    // w_j hat U_n^m(x_j / re) / re
    std::vector<int> harmonics;

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return receiver * (source * v); }
};

inline KernelFactors assemble_kernel_factors(const PanelMesh& mesh, const DomainSpec& domain, int p) {
    if (!(domain.re > domain.r0)) throw DomainError("assemble: the ground kernel needs re > r0");
    if (p < 2) throw DomainError("assemble: p must be >= 2");
    KernelFactors kf;
    kf.harmonics = active_harmonics(p);
    const long N = static_cast<long>(mesh.size());
    const long P = static_cast<long>(kf.harmonics.size());
    const SpectralConstants constants(p);
    const NormalizedBasis basis(p);
    kf.receiver = Eigen::MatrixXd::Zero(N, P);
    kf.source.resize(P, N);
#pragma omp parallel
    {
        std::vector<double> t(harmonic_count(p));
#pragma omp for schedule(dynamic, 8)
        for (long j = 0; j < N; ++j) {
            const Panel& pj = mesh.panel(j);
            const SourceSignature s = source_signature(pj.centroid / domain.re, constants);
            for (long k = 0; k < P; ++k) kf.source(k, j) = pj.area * s.normalized_values()[kf.harmonics[k]] / domain.re;
            if (mesh.tag(j) == RegionTag::extension) continue;
            basis.evaluate(pj.centroid / domain.re, t);
            for (long k = 0; k < P; ++k) kf.receiver(j, k) = t[kf.harmonics[k]];
        }
    }
    return kf;
}

class BemSystem {
public:
    const PanelMesh& mesh() const { return *mesh_; }
    const DomainSpec& domain() const { return domain_; }
    const BemConfig& config() const { return config_; }
    double nearfield_radius() const { return nearfield_radius_; }
    std::size_t size() const { return mesh_->size(); }
    const Eigen::MatrixXd& free_block() const { return free_; }
    const KernelFactors& factors() const { return factors_; }
    const Eigen::MatrixXd& receiver_factor() const { return factors_.receiver; }
    const Eigen::MatrixXd& source_factor() const { return factors_.source; }
    bool has_ground_kernel() const { return config_.use_ground_kernel; }
    const std::vector<int>& harmonics() const { return factors_.harmonics; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }
    const std::vector<PointCharge>& charges() const { return charges_; }

    // Ground-kernel term alone applied to v, through the factors.
    Eigen::VectorXd apply_kernel(const Eigen::VectorXd& v) const {
        if (!has_ground_kernel()) return Eigen::VectorXd::Zero(size());
        return factors_.apply(v);
    }
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out = free_ * v;
        if (has_ground_kernel()) out.noalias() += factors_.receiver * (factors_.source * v);
        return out;
    }

    // Boundary data: zero total potential on every panel, with the given charges as incident field.
    void set_point_sources(std::vector<PointCharge> charges);

    // Densified kernel matrix w_j K(y_i, x_j; re) evaluated pair by pair (for checks on small meshes).
    Eigen::MatrixXd dense_kernel_matrix(KernelPath path = KernelPath::series) const {
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(size(), size());
        KernelConfig kc;
        kc.scale_radius = domain_.re;
        kc.p = config_.p;
#pragma omp parallel for schedule(dynamic, 4)
        for (long i = 0; i < static_cast<long>(size()); ++i)
            for (std::size_t j = 0; j < size(); ++j)
                K(i, j) = mesh_->panel(j).area * kernel_dirichlet(mesh_->panel(i).centroid, mesh_->panel(j).centroid, kc, path);
        return K;
    }

private:
    friend BemSystem assemble(std::shared_ptr<const PanelMesh>, const DomainSpec&, const BemConfig&);

    std::shared_ptr<const PanelMesh> mesh_;
    DomainSpec domain_;
    BemConfig config_;
    double nearfield_radius_ = 0.0;
    Eigen::MatrixXd free_;
    KernelFactors factors_;
    std::vector<std::string> warnings_;
    Eigen::VectorXd rhs_;
    std::vector<PointCharge> charges_;
};

namespace detail {

// Incident potential of the charges at y (free-space part plus optional ground-kernel part).
class IncidentField {
public:
    IncidentField(const std::vector<PointCharge>& charges, const DomainSpec& domain, int p, bool kernel)
        : charges_(charges), re_(domain.re), p_(p) {
        if (!kernel) return;
        const SpectralConstants c(p);
        coeff_ = Eigen::VectorXd::Zero(harmonic_count(p));
        for (const auto& q : charges) {
            if (!q.with_ground_kernel) continue;
            const SourceSignature s = source_signature(q.position / re_, c);
            for (int i = 0; i < harmonic_count(p); ++i) coeff_[i] += q.strength * s.normalized_values()[i] / re_;
            active_ = true;
        }
        if (active_) basis_ = std::make_unique<NormalizedBasis>(p);
    }

    double free_part(const Point3& y) const {
        double s = 0.0;
        for (const auto& q : charges_) s += q.strength * green(y, q.position);
        return s;
    }
    double kernel_part(const Point3& y) const {
        if (!active_) return 0.0;
        std::vector<double> t(harmonic_count(p_));
        basis_->evaluate(y / re_, t);
        return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size()).dot(coeff_);
    }

private:
    std::vector<PointCharge> charges_;
    double re_;
    int p_;
    bool active_ = false;
    Eigen::VectorXd coeff_;
    std::unique_ptr<NormalizedBasis> basis_;
};

}  // namespace detail

inline void BemSystem::set_point_sources(std::vector<PointCharge> charges) {
    charges_ = std::move(charges);
    const detail::IncidentField inc(charges_, domain_, std::max(config_.p, 2), has_ground_kernel());
    rhs_.resize(size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(size()); ++i) {
        const Point3& y = mesh_->panel(i).centroid;
        double v = inc.free_part(y);
        if (mesh_->tag(i) != RegionTag::extension) v += inc.kernel_part(y);
        rhs_[i] = -v;
    }
}

inline double default_nearfield_radius(const PanelMesh& mesh) { return 5.0 * mesh.mean_diameter(); }

inline BemSystem assemble(std::shared_ptr<const PanelMesh> mesh_ptr, const DomainSpec& domain, const BemConfig& config) {
    config.validate();
    domain.validate();
    if (config.use_ground_kernel && !(domain.re > domain.r0)) throw DomainError("assemble: the ground kernel needs re > r0");
    const PanelMesh& mesh = *mesh_ptr;
    mesh.check_against(domain);
    BemSystem sys;
    sys.mesh_ = mesh_ptr;
    sys.domain_ = domain;
    sys.config_ = config;
    sys.nearfield_radius_ = config.nearfield_radius > 0.0 ? config.nearfield_radius : default_nearfield_radius(mesh);
    const long N = static_cast<long>(mesh.size());
    const double rnf = sys.nearfield_radius_;

    sys.free_.resize(N, N);
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < N; ++i) {
        const Point3& y = mesh.panel(i).centroid;
        for (long j = 0; j < N; ++j) {
            const Panel& pj = mesh.panel(j);
            const double d = (y - pj.centroid).norm();
            sys.free_(i, j) = (i == j || d < rnf) ? triangle_single_layer(pj, y) : pj.area / (4.0 * pi * d);
        }
    }

    if (!config.use_ground_kernel) return sys;
    const int p = config.p;
    const double implied = std::pow(domain.r0 / domain.re, p);
    if (implied > config.prescribed_eps) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "p = %d is too small for re/r0 = %.4g: implied kernel error %.3g exceeds %.3g", p,
                      domain.re / domain.r0, implied, config.prescribed_eps);
        sys.warnings_.push_back(buf);
    }
    sys.factors_ = assemble_kernel_factors(mesh, domain, p);
    return sys;
}

inline BemSystem assemble(const PanelMesh& mesh, const DomainSpec& domain, const BemConfig& config) {
    return assemble(std::make_shared<const PanelMesh>(mesh), domain, config);
}

}  // namespace holegf

// ---- matrix-free operator for the iterative solver ----

namespace holegf::detail {
class FactoredOperator;
}

namespace Eigen::internal {
template <>
struct traits<holegf::detail::FactoredOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace holegf::detail {

// Row-scaled system D^-1 (F + R S) applied without forming R S.
class FactoredOperator : public Eigen::EigenBase<FactoredOperator> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    FactoredOperator(const BemSystem& s, const Eigen::VectorXd& inv_diag) : sys_(&s), inv_diag_(&inv_diag) {}
    Eigen::Index rows() const { return static_cast<Eigen::Index>(sys_->size()); }
    Eigen::Index cols() const { return rows(); }

    template <typename Rhs>
    Eigen::Product<FactoredOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<FactoredOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return inv_diag_->cwiseProduct(sys_->apply(v)); }

private:
    const BemSystem* sys_;
    const Eigen::VectorXd* inv_diag_;
};

}  // namespace holegf::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<holegf::detail::FactoredOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<holegf::detail::FactoredOperator, Rhs,
                                generic_product_impl<holegf::detail::FactoredOperator, Rhs>> {
    using Scalar = typename Product<holegf::detail::FactoredOperator, Rhs>::Scalar;
    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const holegf::detail::FactoredOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
        dst += alpha * lhs.apply(Eigen::VectorXd(rhs));
    }
};
}  // namespace Eigen::internal

namespace holegf {

struct SolveReport {
    Eigen::VectorXd sigma;
    double relative_residual = 0.0;
    double condition_estimate = 0.0;  // dense path only
    int iterations = 0;               // iterative path only
};

inline SolveReport solve(const BemSystem& sys) {
    const Eigen::VectorXd& b = sys.rhs();
    if (b.size() != static_cast<Eigen::Index>(sys.size())) throw SolverError("solve: right-hand side not set", 0.0);
    SolveReport rep;
    const double bnorm = b.norm();
    if (sys.config().solver == SolverKind::dense) {
        Eigen::MatrixXd A = sys.free_block();
        if (sys.has_ground_kernel()) A.noalias() += sys.receiver_factor() * sys.source_factor();
        Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(A);
        const double rc = lu.rcond();
        rep.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        if (!(rc > 1e-14)) throw SolverError("solve: matrix is singular or ill-conditioned", rep.condition_estimate);
        rep.sigma = lu.solve(b);
    } else {
        Eigen::VectorXd diag = sys.free_block().diagonal();
        if (sys.has_ground_kernel())
            diag += (sys.receiver_factor().array() * sys.source_factor().transpose().array()).rowwise().sum().matrix();
        const Eigen::VectorXd inv = diag.cwiseInverse();
        const detail::FactoredOperator op(sys, inv);
        Eigen::GMRES<detail::FactoredOperator, Eigen::IdentityPreconditioner> gmres;
        gmres.set_restart(200);
        gmres.setTolerance(0.1 * sys.config().iterative_tolerance);
        gmres.setMaxIterations(sys.config().max_iterations);
        gmres.compute(op);
        rep.sigma = gmres.solve(inv.cwiseProduct(b));
        rep.iterations = static_cast<int>(gmres.iterations());
    }
    rep.relative_residual = bnorm > 0.0 ? (sys.apply(rep.sigma) - b).norm() / bnorm : 0.0;
    if (!std::isfinite(rep.relative_residual))
        throw SolverError("solve: non-finite solution", rep.condition_estimate);
    if (sys.config().solver == SolverKind::iterative && rep.relative_residual > sys.config().iterative_tolerance)
        throw SolverError("solve: iterative solver stopped at relative residual " + std::to_string(rep.relative_residual),
                          rep.condition_estimate);
    return rep;
}

struct FieldGrid {
    std::vector<Point3> points;
    std::vector<double> total;    // phi
    std::vector<double> induced;  // phi minus the free-space field of the first charge
    std::vector<bool> below_surface;
    std::string label;
};

using SurfacePredicate = std::function<bool(const Point3&)>;

// Potential of the solved system at arbitrary points.
inline FieldGrid evaluate_field(const BemSystem& sys, const Eigen::VectorXd& sigma, const std::vector<Point3>& points,
                                const SurfacePredicate& below_surface = {}, std::string label = {}) {
    const PanelMesh& mesh = sys.mesh();
    const long N = static_cast<long>(mesh.size());
    const long M = static_cast<long>(points.size());
    const double rnf = sys.nearfield_radius();
    const bool kernel = sys.has_ground_kernel();
    const double re = sys.domain().re;
    const int p = std::max(sys.config().p, 2);
    const detail::IncidentField inc(sys.charges(), sys.domain(), p, kernel);

    Eigen::VectorXd coeff;
    if (kernel) {
        coeff = sys.source_factor() * sigma;
        for (const auto& y : points)
            if (!(y.norm() < re)) throw DomainError("evaluate_field: points must lie inside the extended radius re");
    }
    const NormalizedBasis basis(p);

    FieldGrid g;
    g.points = points;
    g.label = std::move(label);
    g.total.assign(M, 0.0);
    g.induced.assign(M, 0.0);
    g.below_surface.assign(M, false);
#pragma omp parallel
    {
        std::vector<double> t(harmonic_count(p));
#pragma omp for schedule(dynamic, 8)
        for (long i = 0; i < M; ++i) {
            const Point3& y = points[i];
            double s = 0.0;
            for (long j = 0; j < N; ++j) {
                const Panel& pj = mesh.panel(j);
                const double d = (y - pj.centroid).norm();
                s += sigma[j] * (d < rnf ? triangle_single_layer(pj, y) : pj.area / (4.0 * pi * d));
            }
            double ker = 0.0;
            if (kernel) {
                basis.evaluate(y / re, t);
                for (std::size_t k = 0; k < sys.harmonics().size(); ++k) ker += t[sys.harmonics()[k]] * coeff[k];
                ker += inc.kernel_part(y);
            }
            const double total = inc.free_part(y) + ker + s;
            g.total[i] = total;
            g.induced[i] = sys.charges().empty() ? total : total - sys.charges()[0].strength * green(y, sys.charges()[0].position);
        }
    }
    if (below_surface)
        for (long i = 0; i < M; ++i) g.below_surface[i] = below_surface(points[i]);
    return g;
}

// ---- export ----

inline void write_field_csv(const FieldGrid& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os << "x,y,z,phi,phi_ind,below_surface\n";
    char buf[256];
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", g.points[i].x(), g.points[i].y(),
                      g.points[i].z(), g.total[i], g.induced[i], g.below_surface[i] ? 1 : 0);
        os << buf;
    }
}

inline void write_solution_csv(const PanelMesh& mesh, const Eigen::VectorXd& sigma, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os << "panel,tag,cx,cy,cz,area,sigma\n";
    char buf[256];
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        const Panel& p = mesh.panel(j);
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", j, tag_name(mesh.tag(j)), p.centroid.x(),
                      p.centroid.y(), p.centroid.z(), p.area, sigma[j]);
        os << buf;
    }
}

}  // namespace holegf
