#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "afem/error.hpp"
#include "afem/fem.hpp"
#include "afem/linsolve.hpp"
#include "oracles/dense.hpp"
#include "oracles/estimator_oracle.hpp"

using namespace afem;

namespace {

Mesh unit_square(int n0 = 1) { return build_initial_mesh({0, 0, 1, 1}, std::nullopt, n0); }

Mesh refined_specimen(int n0, int rounds, unsigned seed) {
    Mesh m = build_initial_mesh({0, 0, 3, 3}, Slit{0.0, 1.5, 1.5}, n0);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick(0.3);
    for (int r = 0; r < rounds; ++r) {
        std::vector<int> ref;
        for (int t = 0; t < m.num_triangles(); ++t)
            if (pick(rng)) ref.push_back(t);
        m = adapt(m, ref, {});
    }
    return m;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

double sum(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

double dotv(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TEST_CASE("quadrature rules integrate polynomials exactly") {
    // integral over the unit reference triangle of x^a y^b = a! b! / (a + b + 2)!
    auto exact = [](int a, int b) {
        return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
    };
    auto integrate = [](std::span<const QuadPoint> rule, int a, int b) {
        double s = 0.0;
        for (const auto& q : rule) s += q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
        return 0.5 * s;
    };
    for (int a = 0; a <= 5; ++a) {
        for (int b = 0; a + b <= 5; ++b) {
            if (a + b <= 2) CHECK(integrate(triangle_rule_degree2(), a, b) == doctest::Approx(exact(a, b)).epsilon(1e-14));
            CHECK(integrate(triangle_rule_degree5(), a, b) == doctest::Approx(exact(a, b)).epsilon(1e-13));
        }
    }
    CHECK(mean_square(1, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("single element mass matches the analytic matrix") {
    const Mesh m = unit_square();
    const SparseMatrix mass = assemble_mass(m, 1.0);
    // vertex 1 = (1,0) and vertex 2 = (0,1) belong to one triangle each
    const double area = 0.5;
    CHECK(mass.at(1, 1) == doctest::Approx(area / 6.0));
    CHECK(mass.at(1, 0) == doctest::Approx(area / 12.0));
    CHECK(mass.at(1, 3) == doctest::Approx(area / 12.0));
    CHECK(mass.at(1, 2) == 0.0);
    CHECK(mass.at(0, 0) == doctest::Approx(2.0 * area / 6.0));
    CHECK(sum(mass.values()) == doctest::Approx(1.0));
}

TEST_CASE("mass row sums equal a third of the incident area") {
    const Mesh m = refined_specimen(4, 3, 1);
    const P1Space space(m);
    const SparseMatrix mass = space.mass(2.5);
    std::vector<double> ones(m.num_vertices(), 1.0);
    const auto rows = mass * ones;
    for (int v = 0; v < m.num_vertices(); ++v) {
        double a = 0.0;
        for (int t : m.vertex_triangles(v)) a += space.area(t);
        CHECK(rows[v] == doctest::Approx(2.5 * a / 3.0).epsilon(1e-13));
    }
    CHECK(sum(mass.values()) == doctest::Approx(2.5 * 9.0).epsilon(1e-13));
    CHECK(mass.asymmetry() <= 1e-12);
}

TEST_CASE("stiffness reproduces linear functions and annihilates constants") {
    const Mesh m = refined_specimen(4, 2, 2);
    const P1Space space(m);
    const SparseMatrix a = space.stiffness(std::vector<double>(m.num_triangles(), 1.0));
    CHECK(a.asymmetry() <= 1e-12);
    std::vector<double> ones(m.num_vertices(), 1.0);
    for (double r : a * ones) CHECK(std::abs(r) <= 1e-12);

    // without a slit, A x vanishes at interior vertices for linear x
    const Mesh sq = unit_square(6);
    const SparseMatrix as = assemble_stiffness(sq, FeFunction(sq, 1.0));
    const FeFunction x = FeFunction::interpolate(sq, [](Point p) { return 2.0 * p.x - 0.5 * p.y + 1.0; });
    const auto r = as * x.values;
    for (int v = 0; v < sq.num_vertices(); ++v)
        if (sq.vertex_labels(v) == 0) CHECK(std::abs(r[v]) <= 1e-12);
}

TEST_CASE("stiffness scales linearly and follows the degradation coefficient") {
    const Mesh m = refined_specimen(2, 2, 3);
    const P1Space space(m);
    const SparseMatrix a1 = space.stiffness(FeFunction(m, 1.0));
    const SparseMatrix a3 = space.stiffness(FeFunction(m, 3.7));
    for (std::size_t i = 0; i < a1.values().size(); ++i)
        CHECK(a3.values()[i] == doctest::Approx(3.7 * a1.values()[i]).epsilon(1e-15));

    const double kappa = 1e-10;
    // degraded coefficient (1 - kappa) v^2 + kappa with v = 0
    const FeFunction v(m, 0.0);
    FeFunction c(m);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (1.0 - kappa) * v[i] * v[i] + kappa;
    const SparseMatrix ak = space.stiffness(c);
    for (std::size_t i = 0; i < a1.values().size(); ++i)
        CHECK(std::abs(ak.values()[i] - kappa * a1.values()[i]) <= 1e-14 * kappa * std::abs(a1.values()[i]));

    CHECK_THROWS_AS(space.stiffness(FeFunction(m, -1.0)), std::invalid_argument);
}

TEST_CASE("assembled matrices are positive (semi)definite on random vectors") {
    const Mesh m = refined_specimen(4, 2, 4);
    const P1Space space(m);
    std::mt19937_64 rng(5);
    const SparseMatrix mass = space.mass(1.0);
    const SparseMatrix stiff = space.stiffness(FeFunction::interpolate(m, [](Point p) { return 0.1 + p.x * p.y; }));
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_values(rng, m.num_vertices());
        CHECK(dotv(x, mass * x) > 0.0);
        CHECK(dotv(x, stiff * x) >= -1e-14);
    }
}

TEST_CASE("load vector") {
    const Mesh m = refined_specimen(4, 2, 6);
    const P1Space space(m);
    for (double b : space.load(FeFunction(m, 0.0))) CHECK(b == 0.0);
    const Mesh sq = unit_square(3);
    CHECK(sum(assemble_load(sq, FeFunction(sq, 1.0))) == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    FeFunction f(m);
    f.values = random_values(rng, f.size());
    const auto b = space.load(f);
    const auto mf = space.unit_mass() * f.values;
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(mf[i]).epsilon(1e-14));

    FeFunction other(sq, 1.0);
    CHECK_THROWS_AS(space.load(other), GenerationMismatch);
}

TEST_CASE("Dirichlet elimination") {
    const Mesh m = unit_square(2);
    const P1Space space(m);
    const SparseMatrix a0 = space.stiffness(FeFunction(m, 1.0));
    std::vector<double> b0(m.num_vertices());
    std::iota(b0.begin(), b0.end(), 1.0);

    SUBCASE("empty set leaves the system unchanged") {
        SparseMatrix a = a0;
        auto b = b0;
        apply_dirichlet(a, b, DirichletSet{});
        CHECK(std::equal(a.values().begin(), a.values().end(), a0.values().begin()));
        CHECK(b == b0);
    }
    SUBCASE("all dofs constrained gives the identity") {
        SparseMatrix a = a0;
        auto b = b0;
        DirichletSet ds;
        for (int i = 0; i < m.num_vertices(); ++i) ds.add(i, 0.5 * i);
        apply_dirichlet(a, b, ds);
        for (int r = 0; r < m.num_vertices(); ++r) {
            for (int c = 0; c < m.num_vertices(); ++c) CHECK(a.at(r, c) == (r == c ? 1.0 : 0.0));
            CHECK(b[r] == 0.5 * r);
        }
    }
    SUBCASE("conflicting values are rejected") {
        DirichletSet ds;
        ds.add(0, 1.0);
        CHECK_NOTHROW(ds.add(0, 1.0));
        CHECK(ds.size() == 1);
        CHECK_THROWS_AS(ds.add(0, 2.0), std::invalid_argument);
    }
}

TEST_CASE("patch test: linear Dirichlet data gives the linear solution") {
    const Mesh m = build_initial_mesh({0, 0, 2, 1}, std::nullopt, 6);
    Mesh r = adapt(m, std::vector<int>{3, 10, 40}, {});
    const P1Space space(r);
    SparseMatrix a = space.stiffness(FeFunction(r, 1.0));
    std::vector<double> b(r.num_vertices(), 0.0);
    auto exact = [](Point p) { return 0.3 * p.x - 1.2 * p.y + 0.7; };
    DirichletSet ds;
    for (int v = 0; v < r.num_vertices(); ++v)
        if (r.vertex_labels(v) != 0) ds.add(v, exact(r.vertex(v)));
    apply_dirichlet(a, b, ds);
    CHECK(a.asymmetry() <= 1e-12);
    auto [x, rep] = solve_spd(a, b);
    CHECK(rep.converged);
    for (int v = 0; v < r.num_vertices(); ++v) {
        const double e = exact(r.vertex(v));
        CHECK(std::abs(x[v] - e) <= 1e-10 * std::max(1.0, std::abs(e)));
    }
}

TEST_CASE("path with pinned ends has the zero solution") {
    // thin strip: the interior row of vertices is a path between two pinned ends
    const Mesh m = build_initial_mesh({0, 0, 2, 1}, std::nullopt, 2);
    const P1Space space(m);
    SparseMatrix a = space.stiffness(FeFunction(m, 1.0));
    std::vector<double> b(m.num_vertices(), 0.0);
    DirichletSet ds;
    for (int v = 0; v < m.num_vertices(); ++v)
        if (m.vertex_labels(v) != 0) ds.add(v, 0.0);
    apply_dirichlet(a, b, ds);
    auto [x, rep] = solve_spd(a, b);
    for (double xi : x) CHECK(xi == 0.0);
}

TEST_CASE("transfer reproduces linears and is convex") {
    const Mesh m = build_initial_mesh({0, 0, 3, 3}, Slit{0.0, 1.5, 1.5}, 4);
    auto lin = [](Point p) { return 1.5 * p.x - 0.25 * p.y + 2.0; };
    std::mt19937_64 rng(9);
    Mesh cur = m;
    FeFunction f = FeFunction::interpolate(cur, lin);
    FeFunction g(cur);
    g.values = random_values(rng, g.size(), 0.0, 1.0);
    for (int round = 0; round < 5; ++round) {
        std::vector<int> ref;
        std::bernoulli_distribution pick(0.3);
        for (int t = 0; t < cur.num_triangles(); ++t)
            if (pick(rng)) ref.push_back(t);
        Mesh next = adapt(cur, ref, {});
        f = transfer(f, cur, next);
        g = transfer(g, cur, next);
        CHECK(f.tag == next.tag());
        for (int v = 0; v < next.num_vertices(); ++v) {
            CHECK(f[v] == doctest::Approx(lin(next.vertex(v))).epsilon(1e-14));
            CHECK(g[v] >= 0.0);
            CHECK(g[v] <= 1.0);
        }
        cur = std::move(next);
    }
}

TEST_CASE("refine then coarsen round-trips surviving values") {
    const Mesh m = build_initial_mesh({0, 0, 3, 3}, Slit{0.0, 1.5, 1.5}, 4);
    std::mt19937_64 rng(10);
    FeFunction f(m);
    f.values = random_values(rng, f.size());
    std::vector<int> all(m.num_triangles());
    std::iota(all.begin(), all.end(), 0);
    const Mesh r = adapt(m, all, {});
    const FeFunction fr = transfer(f, m, r);
    std::vector<int> allr(r.num_triangles());
    std::iota(allr.begin(), allr.end(), 0);
    const Mesh c = adapt(r, {}, allr);
    const FeFunction fc = transfer(fr, r, c);
    REQUIRE(fc.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(fc[i] == f[i]);
}

TEST_CASE("transfer rejects unrelated meshes") {
    const Mesh a = unit_square(2);
    const Mesh b = unit_square(2);
    const FeFunction f(a, 1.0);
    CHECK_THROWS_AS(transfer(f, a, b), GenerationMismatch);
    const Mesh a2 = adapt(a, {}, {});
    const Mesh a3 = adapt(a2, {}, {});
    CHECK_THROWS_AS(transfer(f, a2, a3), GenerationMismatch);
    const FeFunction same = transfer(f, a, a);
    CHECK(same.values == f.values);
}

TEST_CASE("element gradients") {
    const Mesh m = refined_specimen(4, 2, 11);
    const auto gx = element_gradients(m, FeFunction::interpolate(m, [](Point p) { return p.x; }));
    for (const auto& g : gx) {
        CHECK(g.x == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(g.y) <= 1e-13);
    }
    for (const auto& g : element_gradients(m, FeFunction(m, 4.0))) {
        CHECK(g.x == 0.0);
        CHECK(g.y == 0.0);
    }
    std::mt19937_64 rng(12);
    FeFunction u(m);
    u.values = random_values(rng, u.size());
    const auto gu = element_gradients(m, u);
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangle(t);
        const Point ref = oracle::gradient_2x2(m.corners(t), {u[tri[0]], u[tri[1]], u[tri[2]]});
        const double scale = std::hypot(ref.x, ref.y) + 1.0;
        CHECK(std::abs(gu[t].x - ref.x) <= 1e-12 * scale);
        CHECK(std::abs(gu[t].y - ref.y) <= 1e-12 * scale);
    }
}

TEST_CASE("sparse matrix basics") {
    const Mesh m = unit_square(2);
    SparseMatrix a(vertex_pattern(m));
    CHECK(a.rows() == m.num_vertices());
    a.add(0, 0, 2.0);
    CHECK(a.at(0, 0) == 2.0);
    // vertices 0 and 8 are opposite corners and never share a triangle
    CHECK(a.pattern().find(0, 8) == -1);
    CHECK_THROWS_AS(a.add(0, 8, 1.0), std::out_of_range);
    const SparseMatrix other(vertex_pattern(unit_square(2)));
    CHECK_THROWS_AS(SparseMatrix::combine(1.0, a, 1.0, other), GenerationMismatch);
    const auto c = SparseMatrix::combine(2.0, a, -1.0, a);
    CHECK(c.at(0, 0) == 2.0);
}
