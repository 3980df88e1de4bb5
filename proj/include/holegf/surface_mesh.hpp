#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "holegf/errors.hpp"
#include "holegf/geometry.hpp"

namespace holegf {

// Radii of the detailed region (r0) and of the extended region (re).
struct DomainSpec {
    double r0 = 1.0;
    double re = 1.0;

    static DomainSpec from_delta(double r0, double delta) { return {r0, r0 * (1.0 + delta)}; }
    double delta() const { return re / r0 - 1.0; }
    void validate() const {
        if (!(r0 > 0.0 && re >= r0)) throw DomainError("DomainSpec: need re >= r0 > 0");
    }
    bool in_detailed_region(const Point3& y) const { return y.norm() < r0; }
    bool in_extension_ring(const Point3& y) const {
        const double rho = cylindrical_radius(y);
        return y.z() == 0.0 && rho >= r0 && rho <= re;
    }
};

enum class RegionTag { object, ground, extension };

inline const char* tag_name(RegionTag t) {
    switch (t) {
        case RegionTag::object: return "S";
        case RegionTag::ground: return "G0";
        case RegionTag::extension: return "GE";
    }
    return "?";
}

inline RegionTag parse_tag(const std::string& s) {
    if (s == "S") return RegionTag::object;
    if (s == "G0") return RegionTag::ground;
    if (s == "GE") return RegionTag::extension;
    throw MeshError("unknown region tag '" + s + "'");
}

// Flat triangle with the per-edge frames used by the analytic single-layer integral.
struct Panel {
    std::array<Point3, 3> vertices;
    Point3 centroid;
    double area = 0.0;
    Point3 normal;
    std::array<Point3, 3> tangent;      // unit edge direction from vertex q to q+1
    std::array<double, 3> length{};
    std::array<Point3, 3> edge_normal;  // tangent x normal, pointing out of the triangle
    double diameter = 0.0;

    Panel() = default;
    explicit Panel(const std::array<Point3, 3>& v) : vertices(v) {
        centroid = (v[0] + v[1] + v[2]) / 3.0;
        const Point3 n = (v[1] - v[0]).cross(v[2] - v[0]);
        area = 0.5 * n.norm();
        normal = area > 0.0 ? Point3(n / n.norm()) : Point3::Zero();
        for (int q = 0; q < 3; ++q) {
            const Point3 e = v[(q + 1) % 3] - v[q];
            length[q] = e.norm();
            tangent[q] = length[q] > 0.0 ? Point3(e / length[q]) : Point3::Zero();
            edge_normal[q] = tangent[q].cross(normal);
            diameter = std::max(diameter, length[q]);
        }
    }
};

class PanelMesh {
public:
    PanelMesh() = default;
    PanelMesh(std::vector<Point3> vertices, std::vector<std::array<int, 3>> faces, std::vector<RegionTag> tags)
        : vertices_(std::move(vertices)), faces_(std::move(faces)), tags_(std::move(tags)) {
        if (tags_.size() != faces_.size()) throw MeshError("mesh: one region tag per face is required");
        panels_.reserve(faces_.size());
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            std::array<Point3, 3> v;
            for (int q = 0; q < 3; ++q) {
                const int i = faces_[f][q];
                if (i < 0 || i >= static_cast<int>(vertices_.size()))
                    throw MeshError("mesh: face " + std::to_string(f) + " references missing vertex " + std::to_string(i));
                v[q] = vertices_[i];
            }
            Panel p(v);
            const double scale = std::max({p.length[0], p.length[1], p.length[2]});
            if (!(p.area > 1e-14 * scale * scale) || !std::isfinite(p.area))
                throw MeshError("mesh: face " + std::to_string(f) + " has zero area");
            panels_.push_back(p);
        }
    }

    std::size_t size() const { return panels_.size(); }
    const Panel& panel(std::size_t j) const { return panels_[j]; }
    const std::vector<Panel>& panels() const { return panels_; }
    RegionTag tag(std::size_t j) const { return tags_[j]; }
    const std::vector<RegionTag>& tags() const { return tags_; }
    const std::vector<Point3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& faces() const { return faces_; }

    std::map<RegionTag, std::size_t> tag_histogram() const {
        std::map<RegionTag, std::size_t> h;
        for (RegionTag t : tags_) ++h[t];
        return h;
    }
    std::size_t count(RegionTag t) const {
        std::size_t c = 0;
        for (RegionTag x : tags_) c += (x == t);
        return c;
    }
    double mean_diameter() const {
        double s = 0.0;
        for (const auto& p : panels_) s += p.diameter;
        return panels_.empty() ? 0.0 : s / panels_.size();
    }
    double total_area(RegionTag t) const {
        double s = 0.0;
        for (std::size_t j = 0; j < size(); ++j)
            if (tags_[j] == t) s += panels_[j].area;
        return s;
    }

    // Extension panels must be flat on z = 0 with centroid radius in [r0, re].
    void check_against(const DomainSpec& domain, double tol = 1e-9) const {
        for (std::size_t j = 0; j < size(); ++j) {
            if (tags_[j] != RegionTag::extension) continue;
            const Panel& p = panels_[j];
            for (const auto& v : p.vertices)
                if (v.z() != 0.0) throw MeshError("mesh: extension face " + std::to_string(j) + " is not on z = 0");
            const double rho = cylindrical_radius(p.centroid);
            if (rho < domain.r0 * (1 - tol) || rho > domain.re * (1 + tol))
                throw MeshError("mesh: extension face " + std::to_string(j) + " lies outside [r0, re]");
        }
    }

    // True when an upward vertical ray from y crosses the surface an odd number of times, which for
    // the bump/dip geometries means y lies beneath the surface.
    bool is_below(const Point3& y) const {
        int hits = 0;
        for (const auto& p : panels_) {
            const Point3 &a = p.vertices[0], &b = p.vertices[1], &c = p.vertices[2];
            const double d = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
            if (d == 0.0) continue;  // vertical panel
            const double l1 = ((y.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y.y() - a.y())) / d;
            const double l2 = ((b.x() - a.x()) * (y.y() - a.y()) - (y.x() - a.x()) * (b.y() - a.y())) / d;
            const double l0 = 1.0 - l1 - l2;
            // half-open on shared edges so a ray through an edge counts once
            if (l0 < 0.0 || l1 < 0.0 || l2 <= 0.0) continue;
            const double z = l0 * a.z() + l1 * b.z() + l2 * c.z();
            if (z > y.z()) ++hits;
        }
        return hits % 2 == 1;
    }

private:
    std::vector<Point3> vertices_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<RegionTag> tags_;
    std::vector<Panel> panels_;
};

namespace detail {

struct Ring {
    std::vector<int> ids;
    std::vector<double> angles;  // increasing, within [offset, offset + 2pi)
};

class MeshBuilder {
public:
    // Desired normal direction for a triangle with the given centroid.
    using Orientation = std::function<bool(const Point3& centroid, const Point3& normal)>;

    int add(const Point3& p) {
        v_.push_back(p);
        return static_cast<int>(v_.size()) - 1;
    }

    Ring ring(double rho, double z, int count, double offset) {
        Ring r;
        for (int k = 0; k < count; ++k) {
            const double a = offset + 2.0 * pi * k / count;
            r.ids.push_back(add(Point3(rho * std::cos(a), rho * std::sin(a), z)));
            r.angles.push_back(a);
        }
        return r;
    }

    Ring ring_on_sphere(double theta, double zsign, int count, double offset, double radius = 1.0) {
        const double rho = radius * std::sin(theta);
        const double z = (theta == pi / 2) ? 0.0 : zsign * radius * std::cos(theta);
        Ring r;
        for (int k = 0; k < count; ++k) {
            const double a = offset + 2.0 * pi * k / count;
            r.ids.push_back(add(Point3(rho * std::cos(a), rho * std::sin(a), z)));
            r.angles.push_back(a);
        }
        return r;
    }

    void triangle(int a, int b, int c, RegionTag tag, const Orientation& outward) {
        const Point3 n = (v_[b] - v_[a]).cross(v_[c] - v_[a]);
        const Point3 cen = (v_[a] + v_[b] + v_[c]) / 3.0;
        if (outward(cen, n)) f_.push_back({a, b, c});
        else f_.push_back({a, c, b});
        t_.push_back(tag);
    }

    void fan(int apex, const Ring& r, RegionTag tag, const Orientation& o) {
        const int n = static_cast<int>(r.ids.size());
        for (int k = 0; k < n; ++k) triangle(apex, r.ids[k], r.ids[(k + 1) % n], tag, o);
    }

    // Triangulate the band between two closed rings by merging them in angle order.
    void zip(const Ring& a, const Ring& b, RegionTag tag, const Orientation& o) {
        const int na = static_cast<int>(a.ids.size()), nb = static_cast<int>(b.ids.size());
        auto ang = [](const Ring& r, int i) {
            const int n = static_cast<int>(r.ids.size());
            return r.angles[i % n] + 2.0 * pi * (i / n);
        };
        int i = 0, j = 0;
        while (i < na || j < nb) {
            const bool advance_a = (j == nb) || (i < na && ang(a, i + 1) <= ang(b, j + 1));
            if (advance_a) {
                triangle(a.ids[i % na], a.ids[(i + 1) % na], b.ids[j % nb], tag, o);
                ++i;
            } else {
                triangle(a.ids[i % na], b.ids[(j + 1) % nb], b.ids[j % nb], tag, o);
                ++j;
            }
        }
    }

    PanelMesh finish() { return PanelMesh(std::move(v_), std::move(f_), std::move(t_)); }

private:
    std::vector<Point3> v_;
    std::vector<std::array<int, 3>> f_;
    std::vector<RegionTag> t_;
};

inline int ring_count(double rho, double h) { return std::max(6, static_cast<int>(std::lround(2.0 * pi * rho / h))); }

inline bool up(const Point3&, const Point3& n) { return n.z() > 0.0; }

// Latitude bands of the unit hemisphere on the side zsign, ending with the equator ring.
inline Ring hemisphere(MeshBuilder& b, double zsign, double h, RegionTag tag, const MeshBuilder::Orientation& o,
                       int equator_count) {
    const int bands = std::max(2, static_cast<int>(std::ceil((pi / 2) / h)));
    const int apex = b.add(Point3(0, 0, zsign));
    Ring prev;
    for (int k = 1; k <= bands; ++k) {
        const double theta = (k == bands) ? pi / 2 : (pi / 2) * k / bands;
        const int count = (k == bands) ? equator_count : ring_count(std::sin(theta), h);
        const double offset = (k % 2) ? 0.0 : pi / count;
        Ring r = (k == bands) ? b.ring(1.0, 0.0, count, 0.0) : b.ring_on_sphere(theta, zsign, count, offset);
        if (k == 1) b.fan(apex, r, tag, o);
        else b.zip(prev, r, tag, o);
        prev = std::move(r);
    }
    return prev;
}

// Flat annulus bands from an existing inner ring at radius rho0 out to rho1.
inline Ring annulus(MeshBuilder& b, Ring inner, double rho0, double rho1, double h, RegionTag tag) {
    const int steps = std::max(1, static_cast<int>(std::ceil((rho1 - rho0) / h - 1e-9)));
    for (int k = 1; k <= steps; ++k) {
        const double rho = (k == steps) ? rho1 : rho0 + (rho1 - rho0) * k / steps;
        const int count = ring_count(rho, h);
        Ring r = b.ring(rho, 0.0, count, (k % 2) ? pi / count : 0.0);
        b.zip(inner, r, tag, up);
        inner = std::move(r);
    }
    return inner;
}

}  // namespace detail

// Unit hemisphere (bump for sign = +1, dip for sign = -1) joined to the flat ground out to r0
// and the extension ring from r0 to re.
inline PanelMesh make_bump_dip_mesh(int sign, double r0, double re, double target_edge) {
    if (!(target_edge > 0.0)) throw DomainError("make_bump_dip_mesh: target_edge must be positive");
    if (!(re >= r0)) throw DomainError("make_bump_dip_mesh: re must be >= r0");
    if (sign != 1 && sign != -1) throw DomainError("make_bump_dip_mesh: sign must be +1 or -1");
    if (sign == 1 && !(r0 > 1.0)) throw DomainError("make_bump_dip_mesh: a bump needs r0 > 1");
    if (sign == -1 && !(r0 >= 1.0)) throw DomainError("make_bump_dip_mesh: a dip needs r0 >= 1");
    detail::MeshBuilder b;
    // bump normals point away from the centre, the dip bowl's toward it
    const detail::MeshBuilder::Orientation object_side = [sign](const Point3& c, const Point3& n) {
        return sign * n.dot(c) > 0.0;
    };
    const double h = target_edge;
    detail::Ring rim = detail::hemisphere(b, sign, h, RegionTag::object, object_side, detail::ring_count(1.0, h));
    if (r0 > 1.0) rim = detail::annulus(b, rim, 1.0, r0, h, RegionTag::ground);
    if (re > r0) detail::annulus(b, rim, r0, re, h, RegionTag::extension);
    return b.finish();
}

// Flat disc of the given radius on z = 0 (tagged ground), normals +z.
inline PanelMesh make_disk_mesh(double radius, double target_edge) {
    if (!(target_edge > 0.0 && radius > 0.0)) throw DomainError("make_disk_mesh: positive radius and edge required");
    detail::MeshBuilder b;
    const int centre = b.add(Point3(0, 0, 0));
    const double first = std::min(target_edge, radius);
    detail::Ring r = b.ring(first, 0.0, detail::ring_count(first, target_edge), 0.0);
    b.fan(centre, r, RegionTag::ground, detail::up);
    if (radius > first) detail::annulus(b, r, first, radius, target_edge, RegionTag::ground);
    return b.finish();
}

// Upper unit hemisphere alone (open along the equator), normals outward.
inline PanelMesh make_hemisphere_mesh(double target_edge) {
    if (!(target_edge > 0.0)) throw DomainError("make_hemisphere_mesh: target_edge must be positive");
    detail::MeshBuilder b;
    const detail::MeshBuilder::Orientation outward = [](const Point3& c, const Point3& n) { return n.dot(c) > 0.0; };
    detail::hemisphere(b, 1.0, target_edge, RegionTag::object, outward, detail::ring_count(1.0, target_edge));
    return b.finish();
}

// Closed unit sphere, normals outward. The lower half mirrors the upper half exactly so that
// solutions antisymmetric in z vanish on z = 0 at the discrete level too.
inline PanelMesh make_sphere_mesh(double target_edge) {
    if (!(target_edge > 0.0)) throw DomainError("make_sphere_mesh: target_edge must be positive");
    const PanelMesh upper = make_hemisphere_mesh(target_edge);
    std::vector<Point3> v = upper.vertices();
    std::vector<std::array<int, 3>> f = upper.faces();
    std::vector<int> mirror(v.size());
    for (std::size_t i = 0; i < upper.vertices().size(); ++i) {
        const Point3& p = upper.vertices()[i];
        if (p.z() == 0.0) {
            mirror[i] = static_cast<int>(i);
        } else {
            mirror[i] = static_cast<int>(v.size());
            v.emplace_back(p.x(), p.y(), -p.z());
        }
    }
    for (const auto& t : upper.faces()) f.push_back({mirror[t[0]], mirror[t[2]], mirror[t[1]]});
    return PanelMesh(std::move(v), std::move(f), std::vector<RegionTag>(f.size(), RegionTag::object));
}

// ---- text format ----

inline void save_mesh(const PanelMesh& mesh, std::ostream& os) {
    char buf[128];
    os << "holegf-mesh 1\n";
    os << "vertices " << mesh.vertices().size() << "\n";
    for (const auto& v : mesh.vertices()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        os << buf;
    }
    os << "faces " << mesh.faces().size() << "\n";
    for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
        const auto& t = mesh.faces()[f];
        os << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << tag_name(mesh.tag(f)) << "\n";
    }
    os << "end\n";
}

inline void save_mesh(const PanelMesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw MeshError("cannot write mesh file '" + path + "'");
    save_mesh(mesh, os);
}

inline PanelMesh load_mesh(std::istream& is) {
    std::string line;
    int lineno = 0;
    auto next = [&]() -> std::string {
        while (std::getline(is, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            return line;
        }
        throw MeshError("mesh file ended early (line " + std::to_string(lineno) + ")");
    };
    auto fail = [&](const std::string& what) { throw MeshError("mesh line " + std::to_string(lineno) + ": " + what); };

    std::istringstream hdr(next());
    std::string magic;
    int version = 0;
    if (!(hdr >> magic >> version) || magic != "holegf-mesh" || version != 1) fail("expected header 'holegf-mesh 1'");

    std::istringstream vh(next());
    std::string kw;
    long nv = -1;
    if (!(vh >> kw >> nv) || kw != "vertices" || nv < 0) fail("expected 'vertices <count>'");
    std::vector<Point3> verts(nv);
    for (long i = 0; i < nv; ++i) {
        std::istringstream ls(next());
        double x, y, z;
        std::string extra;
        if (!(ls >> x >> y >> z) || (ls >> extra)) fail("vertex line needs exactly three numbers");
        verts[i] = Point3(x, y, z);
    }
    std::istringstream fh(next());
    long nf = -1;
    if (!(fh >> kw >> nf) || kw != "faces" || nf < 0) fail("expected 'faces <count>'");
    std::vector<std::array<int, 3>> faces(nf);
    std::vector<RegionTag> tags(nf);
    for (long f = 0; f < nf; ++f) {
        std::istringstream ls(next());
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.size() != 4) {
            if (tok.size() == 3) fail("face " + std::to_string(f) + " is missing its region tag");
            fail("face " + std::to_string(f) + " must have three vertex indices and a tag");
        }
        for (int q = 0; q < 3; ++q) {
            std::size_t used = 0;
            long idx = -1;
            try {
                idx = std::stol(tok[q], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok[q].size()) fail("face " + std::to_string(f) + " has a non-integer index");
            faces[f][q] = static_cast<int>(idx);
        }
        try {
            tags[f] = parse_tag(tok[3]);
        } catch (const MeshError& e) {
            fail(e.what());
        }
    }
    std::istringstream tail(next());
    std::string end_kw;
    if (!(tail >> end_kw) || end_kw != "end") fail("expected 'end'");
    return PanelMesh(std::move(verts), std::move(faces), std::move(tags));
}

inline PanelMesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MeshError("cannot open mesh file '" + path + "'");
    return load_mesh(is);
}

}  // namespace holegf
