#pragma once

#include <memory>
#include <span>
#include <vector>

#include "afem/mesh.hpp"

namespace afem {

/// Row-compressed pattern with sorted columns; diagonal always present.
struct SparsityPattern {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> cols;
    MeshTag tag{};

    int nnz() const { return static_cast<int>(cols.size()); }
    /// Position of (r, c) in cols, or -1.
    int find(int r, int c) const;
};

/// Pattern of the P1 vertex adjacency graph of mesh.
std::shared_ptr<const SparsityPattern> vertex_pattern(const Mesh& mesh);

class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(std::shared_ptr<const SparsityPattern> pattern);

    int rows() const { return pattern_ ? pattern_->n : 0; }
    const SparsityPattern& pattern() const { return *pattern_; }
    const std::shared_ptr<const SparsityPattern>& pattern_ptr() const { return pattern_; }
    const MeshTag& tag() const { return pattern_->tag; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Entry (r, c); zero outside the pattern.
    double at(int r, int c) const;
    /// Adds to an entry inside the pattern; throws std::out_of_range otherwise.
    void add(int r, int c, double v);

    std::vector<double> diagonal() const;

    /// y = A x, row-parallel over the active kernel table.
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    /// Largest |A_rc - A_cr| relative to the largest |A_rc|.
    double asymmetry() const;

    /// alpha A + beta B over the shared pattern.
    static SparseMatrix combine(double alpha, const SparseMatrix& a, double beta,
                                const SparseMatrix& b);

private:
    std::shared_ptr<const SparsityPattern> pattern_;
    std::vector<double> values_;
};

} // namespace afem
