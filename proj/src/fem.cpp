#include "afem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"
#include "afem/parallel.hpp"

namespace afem {

std::span<const QuadPoint> triangle_rule_degree2() {
    static const std::array<QuadPoint, 3> rule{{
        {{0.5, 0.5, 0.0}, 1.0 / 3.0},
        {{0.0, 0.5, 0.5}, 1.0 / 3.0},
        {{0.5, 0.0, 0.5}, 1.0 / 3.0},
    }};
    return rule;
}

std::span<const QuadPoint> triangle_rule_degree5() {
    static const std::array<QuadPoint, 7> rule = [] {
        const double s = std::sqrt(15.0);
        const double a = (6.0 - s) / 21.0, b = (6.0 + s) / 21.0;
        const double wa = (155.0 - s) / 1200.0, wb = (155.0 + s) / 1200.0;
        return std::array<QuadPoint, 7>{{
            {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
            {{a, a, 1.0 - 2.0 * a}, wa},
            {{a, 1.0 - 2.0 * a, a}, wa},
            {{1.0 - 2.0 * a, a, a}, wa},
            {{b, b, 1.0 - 2.0 * b}, wb},
            {{b, 1.0 - 2.0 * b, b}, wb},
            {{1.0 - 2.0 * b, b, b}, wb},
        }};
    }();
    return rule;
}

FeFunction FeFunction::interpolate(const Mesh& mesh, const std::function<double(Point)>& f) {
    FeFunction out(mesh);
    for (int v = 0; v < mesh.num_vertices(); ++v) out.values[v] = f(mesh.vertex(v));
    return out;
}

void require_generation(const MeshTag& expected, const MeshTag& actual, std::string_view what) {
    if (!(expected == actual)) {
        throw GenerationMismatch(fmt::format("{} is bound to mesh {}, expected {}", what,
                                             to_string(actual), to_string(expected)));
    }
}

P1Space::P1Space(const Mesh& mesh)
    : mesh_(&mesh), tag_(mesh.tag()), area_(mesh.num_triangles()), grad_(mesh.num_triangles()),
      pattern_(vertex_pattern(mesh)), scatter_(mesh.num_triangles()) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto p = mesh.corners(t);
        const double twice = cross(p[1] - p[0], p[2] - p[0]);
        if (!(twice > 0.0)) throw MeshError(fmt::format("triangle {} has non-positive area", t));
        area_[t] = 0.5 * twice;
        for (int i = 0; i < 3; ++i) {
            const Point& a = p[(i + 1) % 3];
            const Point& b = p[(i + 2) % 3];
            grad_[t][i] = {(a.y - b.y) / twice, (b.x - a.x) / twice};
        }
        const auto& tri = mesh.triangle(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) scatter_[t][3 * i + j] = pattern_->find(tri[i], tri[j]);
    }
    unit_mass_ = mass(1.0);
}

SparseMatrix P1Space::assemble(const std::function<std::array<double, 9>(int)>& local) const {
    const int nt = mesh_->num_triangles();
    std::vector<std::array<double, 9>> ke(nt);
    parallel_for(nt, 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) ke[t] = local(static_cast<int>(t));
    });
    SparseMatrix m(pattern_);
    auto vals = m.values();
    parallel_for(num_dofs(), 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            for (int t : mesh_->vertex_triangles(static_cast<int>(r))) {
                const auto& tri = mesh_->triangle(t);
                const int i = tri[0] == static_cast<int>(r) ? 0 : tri[1] == static_cast<int>(r) ? 1 : 2;
                for (int j = 0; j < 3; ++j) vals[scatter_[t][3 * i + j]] += ke[t][3 * i + j];
            }
        }
    });
    return m;
}

SparseMatrix P1Space::mass(double density) const {
    if (!(density > 0.0)) throw std::invalid_argument("mass density must be positive");
    std::vector<double> c(mesh_->num_triangles(), density);
    return weighted_mass(c);
}

SparseMatrix P1Space::weighted_mass(std::span<const double> element_coeff) const {
    if (element_coeff.size() != area_.size()) throw std::invalid_argument("coefficient size mismatch");
    return assemble([&](int t) {
        const double s = element_coeff[t] * area_[t] / 12.0;
        std::array<double, 9> k{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) k[3 * i + j] = (i == j ? 2.0 : 1.0) * s;
        return k;
    });
}

SparseMatrix P1Space::stiffness(std::span<const double> element_coeff) const {
    if (element_coeff.size() != area_.size()) throw std::invalid_argument("coefficient size mismatch");
    for (std::size_t t = 0; t < element_coeff.size(); ++t) {
        if (!(element_coeff[t] >= 0.0)) {
            throw std::invalid_argument(
                fmt::format("stiffness coefficient {} on triangle {} is negative", element_coeff[t], t));
        }
    }
    return assemble([&](int t) {
        const double s = element_coeff[t] * area_[t];
        const auto& g = grad_[t];
        std::array<double, 9> k{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) k[3 * i + j] = s * dot(g[i], g[j]);
        return k;
    });
}

SparseMatrix P1Space::stiffness(const FeFunction& nodal_coeff) const {
    require_generation(tag_, nodal_coeff.tag, "stiffness coefficient");
    return stiffness(element_average(nodal_coeff.values));
}

std::vector<double> P1Space::load(const FeFunction& f) const {
    require_generation(tag_, f.tag, "load");
    const int n = num_dofs();
    std::vector<double> b(n, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int t : mesh_->vertex_triangles(r)) {
            const auto& tri = mesh_->triangle(t);
            double s = 0.0;
            for (int j = 0; j < 3; ++j) s += (tri[j] == r ? 2.0 : 1.0) * f.values[tri[j]];
            b[r] += s * area_[t] / 12.0;
        }
    }
    return b;
}

std::vector<Point> P1Space::gradients(std::span<const double> u) const {
    if (u.size() != static_cast<std::size_t>(num_dofs())) throw std::invalid_argument("field size mismatch");
    std::vector<Point> g(area_.size());
    for (std::size_t t = 0; t < g.size(); ++t) {
        const auto& tri = mesh_->triangle(static_cast<int>(t));
        Point s{};
        for (int i = 0; i < 3; ++i) s = s + u[tri[i]] * grad_[t][i];
        g[t] = s;
    }
    return g;
}

std::vector<double> P1Space::element_average(std::span<const double> nodal) const {
    std::vector<double> c(area_.size());
    for (std::size_t t = 0; t < c.size(); ++t) {
        const auto& tri = mesh_->triangle(static_cast<int>(t));
        c[t] = (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
    }
    return c;
}

SparseMatrix assemble_mass(const Mesh& mesh, double density) { return P1Space(mesh).mass(density); }

SparseMatrix assemble_stiffness(const Mesh& mesh, const FeFunction& coeff) {
    return P1Space(mesh).stiffness(coeff);
}

SparseMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> element_coeff) {
    return P1Space(mesh).stiffness(element_coeff);
}

std::vector<double> assemble_load(const Mesh& mesh, const FeFunction& f) { return P1Space(mesh).load(f); }

void DirichletSet::add(int dof, double value) {
    for (const auto& [d, v] : entries_) {
        if (d != dof) continue;
        if (v != value) {
            throw std::invalid_argument(
                fmt::format("dof {} prescribed twice with different values ({} and {})", dof, v, value));
        }
        return;
    }
    entries_.emplace_back(dof, value);
}

void apply_dirichlet(SparseMatrix& a, std::span<double> b, const DirichletSet& ds) {
    if (ds.empty()) return;
    const int n = a.rows();
    std::vector<char> fixed(n, 0);
    std::vector<double> g(n, 0.0);
    for (const auto& [d, v] : ds.entries()) {
        if (d < 0 || d >= n) throw std::out_of_range(fmt::format("Dirichlet dof {} out of range", d));
        fixed[d] = 1;
        g[d] = v;
    }
    const auto& p = a.pattern();
    auto vals = a.values();
    for (int r = 0; r < n; ++r) {
        for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) {
            const int c = p.cols[k];
            if (fixed[r]) {
                vals[k] = c == r ? 1.0 : 0.0;
            } else if (fixed[c]) {
                b[r] -= vals[k] * g[c];
                vals[k] = 0.0;
            }
        }
        if (fixed[r]) b[r] = g[r];
    }
}

FeFunction transfer(const FeFunction& src, const Mesh& src_mesh, const Mesh& dst_mesh) {
    require_generation(src_mesh.tag(), src.tag, "transfer source");
    if (dst_mesh.tag() == src_mesh.tag()) return src;
    if (!dst_mesh.parent_tag() || !(*dst_mesh.parent_tag() == src_mesh.tag())) {
        throw GenerationMismatch(fmt::format("mesh {} was not adapted from {}",
                                             to_string(dst_mesh.tag()), to_string(src_mesh.tag())));
    }
    FeFunction out(dst_mesh);
    const auto origins = dst_mesh.vertex_origins();
    for (std::size_t i = 0; i < origins.size(); ++i) {
        const auto& o = origins[i];
        out.values[i] = o.is_copy() ? src.values[o.a] : 0.5 * (src.values[o.a] + src.values[o.b]);
    }
    return out;
}

std::vector<Point> element_gradients(const Mesh& mesh, const FeFunction& u) {
    require_generation(mesh.tag(), u.tag, "gradient input");
    return P1Space(mesh).gradients(u.values);
}

} // namespace afem
