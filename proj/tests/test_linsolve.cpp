#include <doctest.h>

#include <cmath>
#include <random>

#include "afem/error.hpp"
#include "afem/fem.hpp"
#include "afem/linsolve.hpp"
#include "oracles/dense.hpp"

using namespace afem;

namespace {

// Dense pattern on n rows, enough for small oracle comparisons.
std::shared_ptr<const SparsityPattern> full_pattern(int n) {
    auto p = std::make_shared<SparsityPattern>();
    p->n = n;
    p->row_ptr.push_back(0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) p->cols.push_back(c);
        p->row_ptr.push_back(static_cast<int>(p->cols.size()));
    }
    return p;
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("identity solves in one iteration") {
    SparseMatrix a(full_pattern(5));
    for (int i = 0; i < 5; ++i) a.add(i, i, 1.0);
    const std::vector<double> b{1, -2, 3, 0.5, 7};
    auto [x, rep] = solve_spd(a, b);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);
    for (int i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(b[i]));
}

TEST_CASE("zero right-hand side returns zero without iterating") {
    SparseMatrix a(full_pattern(3));
    for (int i = 0; i < 3; ++i) a.add(i, i, 2.0);
    std::vector<double> x{1, 2, 3};
    const std::vector<double> b(3, 0.0);
    const auto rep = solve_spd(a, b, x);
    CHECK(rep.iterations == 0);
    CHECK(rep.converged);
    for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("random SPD matches the dense oracle") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> d;
    const int n = 50;
    std::vector<std::vector<double>> bm(n, std::vector<double>(n));
    for (auto& row : bm)
        for (auto& v : row) v = d(rng);
    SparseMatrix a(full_pattern(n));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double s = r == c ? 1.0 : 0.0;
            for (int k = 0; k < n; ++k) s += bm[k][r] * bm[k][c];
            a.add(r, c, s);
        }
    }
    std::vector<double> b(n);
    for (auto& v : b) v = d(rng);
    SolveOptions opts;
    opts.tol = 1e-12;
    auto [x, rep] = solve_spd(a, b, opts);
    CHECK(rep.converged);
    CHECK(rep.relative_residual <= opts.tol);
    const auto ref = oracle::dense_solve(oracle::to_dense(a), b);
    // residual tolerance times the condition number bounds the relative error
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = x[i] - ref[i];
    const auto ad = a * diff;
    CHECK(norm(ad) <= 10 * opts.tol * norm(b));
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("error in the energy norm decreases monotonically") {
    const Mesh m = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 12);
    const P1Space space(m);
    SparseMatrix a = SparseMatrix::combine(1.0, space.stiffness(FeFunction(m, 1.0)), 3.0, space.mass(1.0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<double> b(m.num_vertices());
    for (auto& v : b) v = d(rng);
    auto [xs, rep0] = solve_spd(a, b, SolveOptions{1e-14, 10000, {}});
    std::vector<double> errors;
    SolveOptions opts;
    opts.observer = [&](int, std::span<const double> x) {
        std::vector<double> e(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) e[i] = x[i] - xs[i];
        const auto ae = a * e;
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) s += e[i] * ae[i];
        errors.push_back(std::sqrt(std::max(0.0, s)));
    };
    auto [x, rep] = solve_spd(a, b, opts);
    REQUIRE(errors.size() >= 3);
    for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] <= errors[i - 1] * (1 + 1e-10) + 1e-13);
}

TEST_CASE("indefinite matrices are rejected with the step") {
    SparseMatrix a(full_pattern(2));
    a.add(0, 0, 1.0);
    a.add(1, 1, 1.0);
    a.add(0, 1, 3.0);
    a.add(1, 0, 3.0);
    const std::vector<double> b{1.0, -1.0};
    try {
        solve_spd(a, b);
        FAIL("expected IndefiniteMatrixError");
    } catch (const IndefiniteMatrixError& e) {
        CHECK(e.step >= 0);
    }
    SparseMatrix neg(full_pattern(2));
    neg.add(0, 0, -1.0);
    neg.add(1, 1, 1.0);
    CHECK_THROWS_AS(solve_spd(neg, b), IndefiniteMatrixError);
}

TEST_CASE("iteration cap gives a non-converged report") {
    const Mesh m = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 16);
    const P1Space space(m);
    const SparseMatrix a = SparseMatrix::combine(1.0, space.stiffness(FeFunction(m, 1.0)), 1e-3, space.mass(1.0));
    std::vector<double> b(m.num_vertices(), 0.0);
    b[5] = 1.0;
    SolveOptions opts;
    opts.max_iter = 2;
    auto [x, rep] = solve_spd(a, b, opts);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 2);
    CHECK(rep.relative_residual > opts.tol);
}
