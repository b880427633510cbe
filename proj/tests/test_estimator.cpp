#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "afem/error.hpp"
#include "afem/estimator.hpp"
#include "oracles/estimator_oracle.hpp"

using namespace afem;

namespace {

Mesh specimen(int n0, int rounds, unsigned seed, double size = 3.0) {
    Mesh m = build_initial_mesh({0, 0, size, size}, Slit{0.0, size / 2, size / 2}, n0);
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

MaterialParams params() {
    MaterialParams p;
    p.epsilon = 0.3;
    return p;
}

FeFunction random_field(const Mesh& m, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    FeFunction f(m);
    for (double& x : f.values) x = d(rng);
    return f;
}

EstimatorField field(std::vector<double> r2) {
    EstimatorField e;
    e.r2 = std::move(r2);
    double s = 0.0;
    for (double x : e.r2) s += x;
    e.total = std::sqrt(s);
    return e;
}

} // namespace

TEST_CASE("linear u and v = 1 leaves only the element term") {
    const Mesh m = specimen(4, 1, 1);
    const MaterialParams prm = params();
    const auto u = FeFunction::interpolate(m, [](Point p) { return 0.7 * p.x + 0.2 * p.y; });
    const auto est = estimate(m, u, FeFunction(m, 1.0), prm);
    const double a = prm.mu * (1 - prm.kappa) * (0.49 + 0.04);
    const auto geo = geometry(m);
    double sum = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
        const double expect = geo[t].diameter * geo[t].diameter * std::pow(a - prm.nu_pf(), 2) * geo[t].area;
        CHECK(est.r2[t] == doctest::Approx(expect).epsilon(1e-12));
        sum += est.r2[t];
    }
    CHECK(est.total * est.total == doctest::Approx(sum).epsilon(1e-14));
    CHECK(est.tag == m.tag());
}

TEST_CASE("zero displacement and v = 1") {
    const Mesh m = specimen(4, 0, 2);
    const MaterialParams prm = params();
    const auto est = estimate(m, FeFunction(m), FeFunction(m, 1.0), prm);
    const auto geo = geometry(m);
    for (int t = 0; t < m.num_triangles(); ++t)
        CHECK(est.r2[t] == doctest::Approx(geo[t].diameter * geo[t].diameter * prm.nu_pf() * prm.nu_pf() * geo[t].area));
    CHECK(est.total > 0.0);
    CHECK(est.min == doctest::Approx(std::sqrt(*std::min_element(est.r2.begin(), est.r2.end()))));
    CHECK(est.max == doctest::Approx(std::sqrt(*std::max_element(est.r2.begin(), est.r2.end()))));
}

TEST_CASE("estimator matches the brute-force oracle") {
    std::mt19937_64 rng(3);
    const MaterialParams prm = params();
    for (int fixture = 0; fixture < 6; ++fixture) {
        const Mesh m = fixture == 0 ? build_initial_mesh({0, 0, 1, 1}, std::nullopt, 1) : specimen(2, fixture % 3, 10 + fixture);
        const auto u = random_field(m, rng, -1, 1);
        const auto v = random_field(m, rng, 0, 1);
        for (int jump : {0, 1}) {
            EstimatorOptions opts;
            opts.jump = jump == 0 ? JumpKind::GradientMagnitude : JumpKind::NormalFlux;
            const double r2 = std::pow(estimate(m, u, v, prm, opts).total, 2);
            const double ref = oracle::estimator_squared(m, u, v, prm, jump);
            CHECK(r2 == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("element term carries the h squared weight under dilation") {
    // with u = 0 and v constant only the element term remains; it scales with
    // h^2 times the area, i.e. s^4 under a dilation by s
    const MaterialParams prm = params();
    for (double s : {0.5, 2.0, 3.0}) {
        const Mesh a = specimen(2, 2, 5, 3.0);
        const Mesh b = specimen(2, 2, 5, 3.0 * s);
        REQUIRE(a.num_triangles() == b.num_triangles());
        const auto ea = estimate(a, FeFunction(a), FeFunction(a, 0.5), prm);
        const auto eb = estimate(b, FeFunction(b), FeFunction(b, 0.5), prm);
        for (int t = 0; t < a.num_triangles(); ++t) CHECK(eb.r2[t] == doctest::Approx(std::pow(s, 4) * ea.r2[t]).epsilon(1e-12));
    }
}

TEST_CASE("balanced constant state has zero estimator") {
    const Mesh m = specimen(4, 1, 6);
    const MaterialParams prm = params();
    const auto u = FeFunction::interpolate(m, [](Point p) { return 1.3 * p.x - 0.4 * p.y; });
    const double a = prm.mu * (1 - prm.kappa) * (1.69 + 0.16);
    const auto est = estimate(m, u, FeFunction(m, prm.nu_pf() / a), prm);
    CHECK(est.total <= 1e-14 * prm.nu_pf());
}

TEST_CASE("skip_constrained drops elements decided by the bounds") {
    const Mesh m = specimen(4, 0, 7);
    const MaterialParams prm = params();
    EstimatorOptions opts;
    opts.skip_constrained = true;
    CHECK(estimate(m, FeFunction(m), FeFunction(m, 1.0), prm, opts).total == 0.0);
    CrackSet crack(m, 1e-2);
    std::fill(crack.pinned.begin(), crack.pinned.end(), 1);
    opts.crack = &crack;
    const auto e = estimate(m, FeFunction(m, 0.0), FeFunction(m, 0.0), prm, opts);
    CHECK(e.total == 0.0);
}

TEST_CASE("Dorfler marking examples") {
    CHECK(dorfler_mark(field({81, 16, 1, 1, 1}), 0.5) == std::vector<int>{0});
    CHECK(dorfler_mark(field({0, 3, 0, 2, 1}), 1.0) == std::vector<int>{1, 3, 4});
    CHECK(dorfler_mark(field({1, 1, 1, 1}), 0.5) == std::vector<int>{0, 1});
    CHECK(dorfler_mark(field({0, 0}), 0.5).empty());
    CHECK_THROWS_AS(dorfler_mark(field({1}), 0.0), std::invalid_argument);
}

TEST_CASE("Dorfler marking is minimal") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 100;
        std::vector<double> r2(n);
        for (double& x : r2) x = std::pow(d(rng), 4);
        const double theta = 0.05 + 0.9 * d(rng);
        const auto est = field(r2);
        const auto marked = dorfler_mark(est, theta);
        const double total = std::accumulate(r2.begin(), r2.end(), 0.0);
        double acc = 0.0, smallest = INFINITY;
        for (int t : marked) {
            acc += r2[t];
            smallest = std::min(smallest, r2[t]);
        }
        CHECK(acc >= theta * total);
        CHECK(acc - smallest < theta * total);
        // no other set of the same size minus one can reach the goal: the
        // largest |M| - 1 values fall short
        std::vector<double> sorted = r2;
        std::sort(sorted.rbegin(), sorted.rend());
        const double best = std::accumulate(sorted.begin(), sorted.begin() + (marked.size() - 1), 0.0);
        CHECK(best < theta * total);
    }
}

TEST_CASE("fraction marking examples") {
    {
        const auto [r, c] = fraction_mark(field({5, 4, 3, 2, 1, 9, 8, 7, 6, 0}), 0.2, 0.05);
        CHECK(r == std::vector<int>{5, 6});
        CHECK(c.empty());
    }
    {
        const auto [r, c] = fraction_mark(field({1, 2, 3}), 0.0, 0.0);
        CHECK(r.empty());
        CHECK(c.empty());
    }
    {
        const auto [r, c] = fraction_mark(field({1, 1, 1, 1, 1}), 0.2, 0.2);
        CHECK(r == std::vector<int>{0});
        CHECK(c == std::vector<int>{4});
    }
    for (int n = 1; n <= 100; ++n) {
        const auto [r, c] = fraction_mark(field(std::vector<double>(n, 1.0)), 0.2, 0.05);
        CHECK(r.size() == static_cast<std::size_t>(std::ceil(0.2 * n - 1e-9)));
        CHECK(c.size() == static_cast<std::size_t>(std::floor(0.05 * n + 1e-9)));
        std::vector<int> both = r;
        both.insert(both.end(), c.begin(), c.end());
        std::sort(both.begin(), both.end());
        CHECK(std::adjacent_find(both.begin(), both.end()) == both.end());
    }
    CHECK_THROWS_AS(fraction_mark(field({1}), 0.8, 0.5), std::invalid_argument);
}

TEST_CASE("reliability ratio") {
    const Mesh m = specimen(4, 1, 9);
    const MaterialParams prm = params();
    const auto u = FeFunction::interpolate(m, [](Point p) { return std::tanh(3 * (p.y - 1.5)); });
    const P1Space space(m);
    PhaseFieldOptions lin;
    lin.mode = PhaseFieldMode::Linear;
    const auto crit = solve_phasefield(space, u, prm, CrackSet(m, 1e-2), lin);
    FeFunction phi(m);
    phi[10] = 1.0;
    CHECK(reliability_ratio(m, u, crit.v, prm, phi) <= 1e-9);

    std::mt19937_64 rng(10);
    const auto v = random_field(m, rng, 0, 1);
    const auto phi_r = random_field(m, rng, -1, 1);
    FeFunction phi10 = phi_r;
    for (double& x : phi10.values) x *= 10.0;
    const double r1 = reliability_ratio(m, u, v, prm, phi_r);
    CHECK(r1 > 0.0);
    CHECK(reliability_ratio(m, u, v, prm, phi10) == doctest::Approx(r1).epsilon(1e-12));

    auto f = [](Point p) { return std::sin(p.x) * std::cos(2 * p.y); };
    auto g = [](Point p) { return Point{std::cos(p.x) * std::cos(2 * p.y), -2 * std::sin(p.x) * std::sin(2 * p.y)}; };
    auto f10 = [&](Point p) { return 10 * f(p); };
    auto g10 = [&](Point p) { return 10.0 * g(p); };
    CHECK(reliability_ratio(m, u, v, prm, f10, g10) == doctest::Approx(reliability_ratio(m, u, v, prm, f, g)).epsilon(1e-12));

    CHECK_THROWS_AS(reliability_ratio(m, u, v, prm, FeFunction(m, 2.0)), std::invalid_argument);
}
