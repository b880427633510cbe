#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "afem/mesh.hpp"
#include "afem/sparse.hpp"

namespace afem {

/// Barycentric quadrature point; weights sum to 1 (multiply by the area).
struct QuadPoint {
    std::array<double, 3> bary;
    double weight;
};

/// Edge-midpoint rule, exact for quadratics.
std::span<const QuadPoint> triangle_rule_degree2();
/// Seven-point rule, exact for polynomials of degree 5.
std::span<const QuadPoint> triangle_rule_degree5();

/// Mean of v^2 over a triangle for linear v with nodal values a, b, c.
inline double mean_square(double a, double b, double c) {
    return (a * a + b * b + c * c + a * b + b * c + c * a) / 6.0;
}

/// Nodal coefficients of a P1 function, bound to one mesh generation.
struct FeFunction {
    std::vector<double> values;
    MeshTag tag{};

    FeFunction() = default;
    explicit FeFunction(const Mesh& mesh, double fill = 0.0)
        : values(mesh.num_vertices(), fill), tag(mesh.tag()) {}

    static FeFunction interpolate(const Mesh& mesh, const std::function<double(Point)>& f);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Throws GenerationMismatch when the two tags differ.
void require_generation(const MeshTag& expected, const MeshTag& actual, std::string_view what);

/// Cached P1 element data for one mesh generation plus the assembly routines.
///
/// Assembly is row-parallel: each row sums its incident element
/// contributions in the order of Mesh::vertex_triangles, so the result does
/// not depend on the worker count.
class P1Space {
public:
    explicit P1Space(const Mesh& mesh);

    const Mesh& mesh() const { return *mesh_; }
    const MeshTag& tag() const { return tag_; }
    int num_dofs() const { return mesh_->num_vertices(); }
    double area(int t) const { return area_[t]; }
    /// Gradients of the three barycentric basis functions of triangle t.
    const std::array<Point, 3>& basis_gradients(int t) const { return grad_[t]; }
    const std::shared_ptr<const SparsityPattern>& pattern() const { return pattern_; }
    /// Unit-density consistent mass, built once.
    const SparseMatrix& unit_mass() const { return unit_mass_; }

    SparseMatrix mass(double density) const;
    /// sum_t c_t * integral over t of phi_i phi_j.
    SparseMatrix weighted_mass(std::span<const double> element_coeff) const;
    /// sum_t c_t * integral over t of grad phi_i . grad phi_j.
    SparseMatrix stiffness(std::span<const double> element_coeff) const;
    /// Stiffness with the element average of a nodal coefficient.
    SparseMatrix stiffness(const FeFunction& nodal_coeff) const;

    /// b_i = integral of f_h phi_i.
    std::vector<double> load(const FeFunction& f) const;

    /// Element-constant gradient of u on every triangle.
    std::vector<Point> gradients(std::span<const double> u) const;

    /// Element averages of a nodal field.
    std::vector<double> element_average(std::span<const double> nodal) const;

private:
    SparseMatrix assemble(const std::function<std::array<double, 9>(int)>& local) const;

    const Mesh* mesh_;
    MeshTag tag_;
    std::vector<double> area_;
    std::vector<std::array<Point, 3>> grad_;
    std::shared_ptr<const SparsityPattern> pattern_;
    std::vector<std::array<int, 9>> scatter_;
    SparseMatrix unit_mass_;
};

SparseMatrix assemble_mass(const Mesh& mesh, double density);
SparseMatrix assemble_stiffness(const Mesh& mesh, const FeFunction& coeff);
SparseMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> element_coeff);
std::vector<double> assemble_load(const Mesh& mesh, const FeFunction& f);

/// Prescribed nodal values. Repeating a dof with the same value is allowed;
/// a conflicting value throws std::invalid_argument.
class DirichletSet {
public:
    void add(int dof, double value);
    std::span<const std::pair<int, double>> entries() const& { return entries_; }
    std::span<const std::pair<int, double>> entries() && = delete;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<std::pair<int, double>> entries_;
};

/// Symmetric elimination in place: constrained rows and columns are zeroed,
/// b_i -= A_ik g_k on free rows, and constrained rows become g_k = x_k.
void apply_dirichlet(SparseMatrix& a, std::span<double> b, const DirichletSet& ds);

/// Nodal values on dst, which must be the direct successor of src_mesh.
/// Surviving vertices keep their value; new midpoints take the edge average.
FeFunction transfer(const FeFunction& src, const Mesh& src_mesh, const Mesh& dst_mesh);

std::vector<Point> element_gradients(const Mesh& mesh, const FeFunction& u);

} // namespace afem
