#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "afem/sparse.hpp"

namespace afem {

struct SolveOptions {
    double tol = 1e-12;   // relative residual ||b - A x|| / ||b||
    int max_iter = 10000;
    /// Called with the iterate after every CG step (iteration count, x).
    std::function<void(int, std::span<const double>)> observer;
};

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients. x holds the initial guess on
/// entry. Throws IndefiniteMatrixError if p.Ap <= 0 is met.
SolveReport solve_spd(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                      const SolveOptions& opts = {});

/// Same, starting from x = 0.
std::pair<std::vector<double>, SolveReport> solve_spd(const SparseMatrix& a,
                                                      std::span<const double> b,
                                                      const SolveOptions& opts = {});

} // namespace afem
