#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

/// Boundary indicators of the edge-crack specimen.
enum class BoundaryLabel : std::uint8_t {
    Bottom,    // Gamma_1
    Right,     // Gamma_2
    Top,       // Gamma_3
    LeftUpper, // Gamma_4, left edge above the slit
    LeftLower, // Gamma_5, left edge below the slit
    Slit,      // Gamma_c, both crack faces
};

std::string_view to_string(BoundaryLabel label);

struct Rectangle {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

/// Horizontal slit [x_begin, x_end] x {y}.
struct Slit {
    double x_begin = 0.0;
    double x_end = 0.0;
    double y = 0.0;
};

/// Identifies one generation of one mesh lineage. Fields and matrices carry
/// the tag of the mesh they were built on.
struct MeshTag {
    std::uint64_t lineage = 0;
    std::uint32_t generation = 0;
    friend bool operator==(const MeshTag&, const MeshTag&) = default;
};

std::string to_string(const MeshTag& tag);

/// Vertex i of a child generation is the old vertex `a` (a == b) or the
/// midpoint of old vertices a and b.
struct VertexOrigin {
    int a = -1;
    int b = -1;
    bool is_copy() const { return a == b; }
};

struct Edge {
    int a = -1, b = -1;                // a < b
    std::array<int, 2> tri{-1, -1};    // tri[1] == -1 on the boundary
    std::array<int, 2> local{-1, -1};  // local edge index within tri[k]
    std::optional<BoundaryLabel> label;
    bool is_boundary() const { return tri[1] < 0; }
};

struct AdaptSummary {
    int refine_requested = 0;
    int refine_capped = 0;        // skipped because the triangle sits at max level
    int bisections = 0;
    int coarsen_requested = 0;
    int coarsen_rejected = 0;     // not part of a complete, unmarked sibling patch
    int vertices_removed = 0;
    int triangles_before = 0;
    int triangles_after = 0;
};

class Mesh;

Mesh build_initial_mesh(const Rectangle& domain, const std::optional<Slit>& slit, int n0,
                        int max_level = 8);

Mesh adapt(const Mesh& mesh, std::span<const int> refine_set, std::span<const int> coarsen_set,
           AdaptSummary* summary = nullptr);

/// Conforming triangulation with a newest-vertex-bisection forest.
///
/// Vertex 0 of every triangle is its newest vertex; the refinement edge is
/// local edge 0, i.e. (v1, v2). Local edge i is opposite vertex i.
/// Triangle levels count bisections from the initial mesh.
class Mesh {
public:
    using Triangle = std::array<int, 3>;

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    std::span<const Point> vertices() const { return vertices_; }
    const Point& vertex(int i) const { return vertices_[i]; }
    std::span<const Triangle> triangles() const { return triangles_; }
    const Triangle& triangle(int t) const { return triangles_[t]; }
    std::array<Point, 3> corners(int t) const;

    int level(int t) const { return nodes_[node_of_[t]].level; }
    int max_level() const { return max_level_; }

    std::span<const Edge> edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[e]; }
    /// Edge ids of triangle t, indexed by local edge.
    const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[t]; }
    /// Neighbor across local edge i, or -1.
    int neighbor(int t, int local) const;
    std::span<const int> vertex_triangles(int v) const;

    /// Bitmask of boundary labels (1 << label) carried by edges incident to v.
    unsigned vertex_labels(int v) const { return vertex_labels_[v]; }
    bool vertex_has_label(int v, BoundaryLabel label) const {
        return (vertex_labels_[v] >> static_cast<unsigned>(label)) & 1u;
    }

    const MeshTag& tag() const { return tag_; }
    std::uint32_t generation() const { return tag_.generation; }
    /// Tag of the generation this mesh was adapted from, if any.
    const std::optional<MeshTag>& parent_tag() const { return parent_tag_; }
    std::span<const VertexOrigin> vertex_origins() const { return origins_; }

    /// True when t has a parent whose other child is also an active triangle.
    bool has_active_sibling(int t) const;

private:
    struct Node {
        Triangle verts{};
        int parent = -1;
        std::array<int, 2> child{-1, -1};
        int level = 0;
    };

    void finalize();

    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<int> node_of_;          // forest node of each active triangle
    std::vector<Node> nodes_;           // refinement forest, roots first
    std::map<std::pair<int, int>, BoundaryLabel> boundary_;
    int max_level_ = 8;
    MeshTag tag_{};
    std::optional<MeshTag> parent_tag_;
    std::vector<VertexOrigin> origins_;

    // derived
    std::vector<Edge> edges_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<int> vt_offsets_;
    std::vector<int> vt_list_;
    std::vector<unsigned> vertex_labels_;

    friend Mesh build_initial_mesh(const Rectangle&, const std::optional<Slit>&, int, int);
    friend Mesh adapt(const Mesh&, std::span<const int>, std::span<const int>, AdaptSummary*);
};

struct TriangleGeometry {
    double area = 0.0;
    double diameter = 0.0;                // h_tau, longest edge
    std::array<double, 3> edge_length{};  // opposite vertex i
    std::array<Point, 3> normal{};        // unit outward normal of local edge i
    double inradius = 0.0;
    /// h_tau over the diameter of the inscribed circle.
    double shape_ratio() const { return diameter / (2.0 * inradius); }
};

TriangleGeometry triangle_geometry(const std::array<Point, 3>& p);

/// Per-triangle geometry; throws MeshError naming the first degenerate triangle.
std::vector<TriangleGeometry> geometry(const Mesh& mesh);

struct ConformityReport {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Exhaustive check: edge multiplicity, boundary labelling, orientation,
/// level cap and zero-length edges (which would bridge the two slit faces).
ConformityReport check_conformity(const Mesh& mesh);

} // namespace afem
