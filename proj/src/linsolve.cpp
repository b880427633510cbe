#include "afem/linsolve.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"
#include "afem/simd.hpp"

namespace afem {

namespace {

double norm2(std::span<const double> x) { return std::sqrt(simd::dot(x, x)); }

void residual(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
    a.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

} // namespace

SolveReport solve_spd(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                      const SolveOptions& opts) {
    const std::size_t n = b.size();
    if (x.size() != n || static_cast<std::size_t>(a.rows()) != n) {
        throw std::invalid_argument("solve_spd: size mismatch");
    }
    if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw std::invalid_argument("solve_spd: tol must lie in (0, 1)");

    SolveReport rep;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rep.converged = true;
        return rep;
    }

    std::vector<double> inv_diag = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(inv_diag[i] > 0.0)) {
            throw IndefiniteMatrixError(fmt::format("non-positive diagonal {} at row {}", inv_diag[i], i), 0);
        }
        inv_diag[i] = 1.0 / inv_diag[i];
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    residual(a, b, x, r);
    double rnorm = norm2(r);
    rep.relative_residual = rnorm / bnorm;
    if (rep.relative_residual <= opts.tol) {
        rep.converged = true;
        return rep;
    }
    simd::mul(r, inv_diag, z);
    p = z;
    double rz = simd::dot(r, z);

    for (int it = 1; it <= opts.max_iter; ++it) {
        a.multiply(p, ap);
        const double pap = simd::dot(p, ap);
        if (!(pap > 0.0)) {
            throw IndefiniteMatrixError(
                fmt::format("conjugate gradients met curvature p.Ap = {:.3e} at iteration {}", pap, it), it);
        }
        const double alpha = rz / pap;
        simd::axpy(alpha, p, x);
        simd::axpy(-alpha, ap, r);
        rep.iterations = it;
        if (opts.observer) opts.observer(it, x);

        rnorm = norm2(r);
        if (rnorm <= opts.tol * bnorm) {
            // confirm with the true residual; the recursive one drifts
            residual(a, b, x, r);
            rnorm = norm2(r);
            if (rnorm <= opts.tol * bnorm) {
                rep.relative_residual = rnorm / bnorm;
                rep.converged = true;
                return rep;
            }
        }
        simd::mul(r, inv_diag, z);
        const double rz_new = simd::dot(r, z);
        simd::xpby(z, rz_new / rz, p);
        rz = rz_new;
    }
    residual(a, b, x, r);
    rep.relative_residual = norm2(r) / bnorm;
    rep.converged = rep.relative_residual <= opts.tol;
    return rep;
}

std::pair<std::vector<double>, SolveReport> solve_spd(const SparseMatrix& a,
                                                      std::span<const double> b,
                                                      const SolveOptions& opts) {
    std::vector<double> x(b.size(), 0.0);
    const SolveReport rep = solve_spd(a, b, x, opts);
    return {std::move(x), rep};
}

} // namespace afem
