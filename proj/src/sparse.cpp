#include "afem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"
#include "afem/parallel.hpp"
#include "afem/simd.hpp"

namespace afem {

int SparsityPattern::find(int r, int c) const {
    const auto first = cols.begin() + row_ptr[r];
    const auto last = cols.begin() + row_ptr[r + 1];
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return -1;
    return static_cast<int>(it - cols.begin());
}

std::shared_ptr<const SparsityPattern> vertex_pattern(const Mesh& mesh) {
    auto p = std::make_shared<SparsityPattern>();
    const int n = mesh.num_vertices();
    p->n = n;
    p->tag = mesh.tag();
    std::vector<std::vector<int>> adj(n);
    for (int v = 0; v < n; ++v) adj[v].push_back(v);
    for (const Edge& e : mesh.edges()) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    p->row_ptr.assign(n + 1, 0);
    for (int v = 0; v < n; ++v) {
        std::sort(adj[v].begin(), adj[v].end());
        adj[v].erase(std::unique(adj[v].begin(), adj[v].end()), adj[v].end());
        p->row_ptr[v + 1] = p->row_ptr[v] + static_cast<int>(adj[v].size());
    }
    p->cols.reserve(p->row_ptr[n]);
    for (int v = 0; v < n; ++v) p->cols.insert(p->cols.end(), adj[v].begin(), adj[v].end());
    return p;
}

SparseMatrix::SparseMatrix(std::shared_ptr<const SparsityPattern> pattern)
    : pattern_(std::move(pattern)), values_(pattern_->cols.size(), 0.0) {}

double SparseMatrix::at(int r, int c) const {
    const int k = pattern_->find(r, c);
    return k < 0 ? 0.0 : values_[k];
}

void SparseMatrix::add(int r, int c, double v) {
    const int k = pattern_->find(r, c);
    if (k < 0) throw std::out_of_range(fmt::format("entry ({}, {}) outside the sparsity pattern", r, c));
    values_[k] += v;
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(rows(), 0.0);
    for (int r = 0; r < rows(); ++r) d[r] = at(r, r);
    return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != static_cast<std::size_t>(rows()) || y.size() != x.size()) {
        throw std::invalid_argument("SparseMatrix::multiply: size mismatch");
    }
    const auto& k = simd::kernels();
    const int* rp = pattern_->row_ptr.data();
    const int* cols = pattern_->cols.data();
    const double* vals = values_.data();
    parallel_for(y.size(), 4096, [&](std::size_t b, std::size_t e) {
        k.csr_spmv(rp, cols, vals, x.data(), y.data(), b, e);
    });
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(x.size());
    multiply(x, y);
    return y;
}

double SparseMatrix::asymmetry() const {
    double worst = 0.0, scale = 0.0;
    for (int r = 0; r < rows(); ++r) {
        for (int k = pattern_->row_ptr[r]; k < pattern_->row_ptr[r + 1]; ++k) {
            const int c = pattern_->cols[k];
            scale = std::max(scale, std::abs(values_[k]));
            worst = std::max(worst, std::abs(values_[k] - at(c, r)));
        }
    }
    return scale > 0.0 ? worst / scale : 0.0;
}

SparseMatrix SparseMatrix::combine(double alpha, const SparseMatrix& a, double beta,
                                   const SparseMatrix& b) {
    if (a.pattern_ != b.pattern_) {
        if (!(a.tag() == b.tag())) {
            throw GenerationMismatch(fmt::format("combining matrices of generations {} and {}",
                                                 to_string(a.tag()), to_string(b.tag())));
        }
        if (a.pattern_->cols != b.pattern_->cols) throw std::invalid_argument("pattern mismatch");
    }
    SparseMatrix out(a.pattern_);
    for (std::size_t k = 0; k < out.values_.size(); ++k) {
        out.values_[k] = alpha * a.values_[k] + beta * b.values_[k];
    }
    return out;
}

} // namespace afem
