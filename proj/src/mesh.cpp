#include "afem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "afem/error.hpp"

namespace afem {

namespace {

std::atomic<std::uint64_t> next_lineage{1};

bool near_integer(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) <= tol; }

} // namespace

std::string_view to_string(BoundaryLabel label) {
    switch (label) {
    case BoundaryLabel::Bottom: return "bottom";
    case BoundaryLabel::Right: return "right";
    case BoundaryLabel::Top: return "top";
    case BoundaryLabel::LeftUpper: return "left_upper";
    case BoundaryLabel::LeftLower: return "left_lower";
    case BoundaryLabel::Slit: return "slit";
    }
    return "unknown";
}

std::string to_string(const MeshTag& tag) {
    return fmt::format("{}:{}", tag.lineage, tag.generation);
}

std::array<Point, 3> Mesh::corners(int t) const {
    const auto& tri = triangles_[t];
    return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

int Mesh::neighbor(int t, int local) const {
    const Edge& e = edges_[tri_edges_[t][local]];
    return e.tri[0] == t ? e.tri[1] : e.tri[0];
}

std::span<const int> Mesh::vertex_triangles(int v) const {
    return {vt_list_.data() + vt_offsets_[v],
            static_cast<std::size_t>(vt_offsets_[v + 1] - vt_offsets_[v])};
}

bool Mesh::has_active_sibling(int t) const {
    const Node& n = nodes_[node_of_[t]];
    if (n.parent < 0) return false;
    const Node& p = nodes_[n.parent];
    const int other = p.child[0] == node_of_[t] ? p.child[1] : p.child[0];
    const Node& o = nodes_[other];
    return o.child[0] < 0 && o.child[1] < 0;
}

void Mesh::finalize() {
    const int nt = num_triangles();
    const int nv = num_vertices();

    struct Half {
        int a, b, tri, local;
    };
    std::vector<Half> halves;
    halves.reserve(3 * static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles_[t];
        for (int i = 0; i < 3; ++i) {
            int a = tri[(i + 1) % 3];
            int b = tri[(i + 2) % 3];
            if (a > b) std::swap(a, b);
            halves.push_back({a, b, t, i});
        }
    }
    std::sort(halves.begin(), halves.end(), [](const Half& l, const Half& r) {
        return std::tie(l.a, l.b, l.tri) < std::tie(r.a, r.b, r.tri);
    });

    edges_.clear();
    tri_edges_.assign(nt, {-1, -1, -1});
    for (std::size_t i = 0; i < halves.size();) {
        Edge e;
        e.a = halves[i].a;
        e.b = halves[i].b;
        std::size_t j = i;
        int k = 0;
        const int id = static_cast<int>(edges_.size());
        for (; j < halves.size() && halves[j].a == e.a && halves[j].b == e.b; ++j, ++k) {
            if (k < 2) {
                e.tri[k] = halves[j].tri;
                e.local[k] = halves[j].local;
            }
            tri_edges_[halves[j].tri][halves[j].local] = id;
        }
        if (k > 2) {
            throw MeshError(fmt::format("edge ({}, {}) shared by {} triangles", e.a, e.b, k));
        }
        if (auto it = boundary_.find({e.a, e.b}); it != boundary_.end()) e.label = it->second;
        edges_.push_back(e);
        i = j;
    }

    vt_offsets_.assign(nv + 1, 0);
    for (const auto& tri : triangles_)
        for (int v : tri) ++vt_offsets_[v + 1];
    for (int v = 0; v < nv; ++v) vt_offsets_[v + 1] += vt_offsets_[v];
    vt_list_.assign(vt_offsets_[nv], -1);
    std::vector<int> fill(vt_offsets_.begin(), vt_offsets_.end() - 1);
    for (int t = 0; t < nt; ++t)
        for (int v : triangles_[t]) vt_list_[fill[v]++] = t;

    vertex_labels_.assign(nv, 0u);
    for (const auto& [key, label] : boundary_) {
        const unsigned bit = 1u << static_cast<unsigned>(label);
        vertex_labels_[key.first] |= bit;
        vertex_labels_[key.second] |= bit;
    }
}

Mesh build_initial_mesh(const Rectangle& domain, const std::optional<Slit>& slit, int n0,
                        int max_level) {
    if (n0 < 1) throw MeshError(fmt::format("n0 must be >= 1, got {}", n0));
    if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) {
        throw MeshError("domain rectangle has non-positive extent");
    }
    if (max_level < 0) throw MeshError("max_level must be non-negative");

    const double hx = (domain.x1 - domain.x0) / n0;
    const double hy = (domain.y1 - domain.y0) / n0;
    const int stride = n0 + 1;

    int slit_row = -1, slit_i0 = 0, slit_i1 = -1;
    if (slit) {
        const double jr = (slit->y - domain.y0) / hy;
        const double ir0 = (slit->x_begin - domain.x0) / hx;
        const double ir1 = (slit->x_end - domain.x0) / hx;
        if (!near_integer(jr) || !near_integer(ir0) || !near_integer(ir1)) {
            throw MeshError(fmt::format(
                "slit [{}, {}] x {{{}}} is not aligned with the {}x{} grid (spacing {} x {})",
                slit->x_begin, slit->x_end, slit->y, n0, n0, hx, hy));
        }
        slit_row = static_cast<int>(std::lround(jr));
        slit_i0 = static_cast<int>(std::lround(ir0));
        slit_i1 = static_cast<int>(std::lround(ir1));
        if (slit_row <= 0 || slit_row >= n0) {
            throw MeshError(fmt::format("slit height {} is not on an interior grid line", slit->y));
        }
        if (slit_i0 < 0 || slit_i1 > n0 || slit_i1 <= slit_i0) {
            throw MeshError("slit endpoints must be ordered grid vertices inside the domain");
        }
    }

    Mesh mesh;
    mesh.max_level_ = max_level;
    mesh.vertices_.reserve(static_cast<std::size_t>(stride) * stride + stride);
    for (int j = 0; j <= n0; ++j)
        for (int i = 0; i <= n0; ++i)
            mesh.vertices_.push_back({domain.x0 + i * hx, domain.y0 + j * hy});

    // Slit vertices get an upper copy; tips strictly inside the domain are shared.
    std::vector<int> upper_copy(stride, -1);
    if (slit) {
        for (int i = slit_i0; i <= slit_i1; ++i) {
            const bool tip = (i == slit_i0 && i > 0) || (i == slit_i1 && i < n0);
            if (tip) continue;
            upper_copy[i] = mesh.num_vertices();
            mesh.vertices_.push_back(mesh.vertices_[slit_row * stride + i]);
        }
    }

    auto vid = [&](int i, int j, bool cell_above_slit) {
        if (cell_above_slit && j == slit_row && upper_copy[i] >= 0) return upper_copy[i];
        return j * stride + i;
    };

    for (int j = 0; j < n0; ++j) {
        const bool above = (j == slit_row);
        for (int i = 0; i < n0; ++i) {
            const int a = vid(i, j, above);
            const int b = vid(i + 1, j, above);
            const int c = vid(i + 1, j + 1, false);
            const int d = vid(i, j + 1, false);
            // Right isosceles halves; the diagonal a-c is the refinement edge of both.
            mesh.triangles_.push_back({b, c, a});
            mesh.triangles_.push_back({d, a, c});
        }
    }

    auto label_edge = [&](int a, int b, BoundaryLabel label) {
        mesh.boundary_[{std::min(a, b), std::max(a, b)}] = label;
    };
    const double split_y = slit ? slit->y : 0.5 * (domain.y0 + domain.y1);
    for (int i = 0; i < n0; ++i) {
        label_edge(vid(i, 0, false), vid(i + 1, 0, false), BoundaryLabel::Bottom);
        label_edge(vid(i, n0, false), vid(i + 1, n0, false), BoundaryLabel::Top);
    }
    for (int j = 0; j < n0; ++j) {
        label_edge(vid(n0, j, false), vid(n0, j + 1, false), BoundaryLabel::Right);
        const double mid_y = domain.y0 + (j + 0.5) * hy;
        const bool upper = mid_y > split_y;
        label_edge(vid(0, j, upper), vid(0, j + 1, false),
                   upper ? BoundaryLabel::LeftUpper : BoundaryLabel::LeftLower);
    }
    if (slit) {
        for (int i = slit_i0; i < slit_i1; ++i) {
            label_edge(vid(i, slit_row, false), vid(i + 1, slit_row, false), BoundaryLabel::Slit);
            label_edge(vid(i, slit_row, true), vid(i + 1, slit_row, true), BoundaryLabel::Slit);
        }
    }

    mesh.nodes_.reserve(mesh.triangles_.size());
    mesh.node_of_.reserve(mesh.triangles_.size());
    for (const auto& tri : mesh.triangles_) {
        mesh.node_of_.push_back(static_cast<int>(mesh.nodes_.size()));
        mesh.nodes_.push_back({tri, -1, {-1, -1}, 0});
    }
    mesh.tag_ = {next_lineage.fetch_add(1), 0};
    mesh.origins_.resize(mesh.vertices_.size());
    for (int v = 0; v < mesh.num_vertices(); ++v) mesh.origins_[v] = {v, v};
    mesh.finalize();
    return mesh;
}

TriangleGeometry triangle_geometry(const std::array<Point, 3>& p) {
    TriangleGeometry g;
    g.area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    double perimeter = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Point a = p[(i + 1) % 3];
        const Point b = p[(i + 2) % 3];
        const Point d = b - a;
        const double len = std::hypot(d.x, d.y);
        g.edge_length[i] = len;
        g.diameter = std::max(g.diameter, len);
        perimeter += len;
        // counterclockwise traversal: outward normal is the tangent rotated clockwise
        g.normal[i] = len > 0.0 ? Point{d.y / len, -d.x / len} : Point{};
    }
    g.inradius = perimeter > 0.0 ? 2.0 * g.area / perimeter : 0.0;
    return g;
}

std::vector<TriangleGeometry> geometry(const Mesh& mesh) {
    std::vector<TriangleGeometry> out;
    out.reserve(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        TriangleGeometry g = triangle_geometry(mesh.corners(t));
        if (!(g.area > 1e-14 * g.diameter * g.diameter) || !(g.area > 0.0)) {
            const auto& tri = mesh.triangle(t);
            throw MeshError(fmt::format("triangle {} ({}, {}, {}) is degenerate: area {}", t, tri[0],
                                        tri[1], tri[2], g.area));
        }
        out.push_back(g);
    }
    return out;
}

ConformityReport check_conformity(const Mesh& mesh) {
    ConformityReport r;
    auto fail = [&](std::string msg) {
        r.ok = false;
        if (r.problems.size() < 20) r.problems.push_back(std::move(msg));
    };
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = triangle_geometry(mesh.corners(t));
        if (!(g.area > 0.0)) fail(fmt::format("triangle {} has non-positive area {}", t, g.area));
        if (mesh.level(t) > mesh.max_level())
            fail(fmt::format("triangle {} exceeds max level ({} > {})", t, mesh.level(t), mesh.max_level()));
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        const Point d = mesh.vertex(edge.b) - mesh.vertex(edge.a);
        if (std::hypot(d.x, d.y) == 0.0)
            fail(fmt::format("edge {} joins coincident vertices {} and {}", e, edge.a, edge.b));
        if (edge.is_boundary() && !edge.label)
            fail(fmt::format("edge ({}, {}) has one triangle but no boundary label (hanging node)",
                             edge.a, edge.b));
        if (!edge.is_boundary() && edge.label)
            fail(fmt::format("labelled edge ({}, {}) is shared by two triangles", edge.a, edge.b));
    }
    return r;
}

} // namespace afem
