#include "afem/phasefield.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "afem/error.hpp"

namespace afem {

int CrackSet::count() const {
    return static_cast<int>(std::count(pinned.begin(), pinned.end(), char{1}));
}

std::vector<int> CrackSet::ids() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < pinned.size(); ++i)
        if (pinned[i]) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<double> reaction_coefficients(const P1Space& space, const FeFunction& u,
                                          const MaterialParams& params) {
    require_generation(space.tag(), u.tag, "displacement");
    const auto g = space.gradients(u.values);
    std::vector<double> c(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) c[t] = params.mu * (1.0 - params.kappa) * dot(g[t], g[t]);
    return c;
}

void phasefield_system(const P1Space& space, const FeFunction& u, const MaterialParams& params,
                       SparseMatrix& a, std::vector<double>& b) {
    const auto c = reaction_coefficients(space, u, params);
    std::vector<double> rho(c.size(), params.rho_pf());
    a = SparseMatrix::combine(1.0, space.stiffness(rho), 1.0, space.weighted_mass(c));
    FeFunction nu(space.mesh(), params.nu_pf());
    b = space.load(nu);
}

namespace {

struct Reduced {
    std::vector<double> gradient;  // A v - b, unconstrained
    double rhs_norm = 0.0;
};

// Solves with the dofs in `fixed` prescribed to `value`; v is the initial
// guess on entry and the solution on exit.
Reduced solve_reduced(const SparseMatrix& a, const std::vector<double>& b, const std::vector<char>& fixed,
                      const std::vector<double>& value, std::vector<double>& v, const SolveOptions& opts,
                      SolveReport& report) {
    const std::size_t n = b.size();
    DirichletSet ds;
    bool any_free = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (fixed[i]) {
            ds.add(static_cast<int>(i), value[i]);
            v[i] = value[i];
        } else {
            any_free = true;
        }
    }
    Reduced r;
    if (any_free) {
        SparseMatrix ar = a;
        std::vector<double> br = b;
        apply_dirichlet(ar, br, ds);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!fixed[i]) s += br[i] * br[i];
        r.rhs_norm = std::sqrt(s);
        // Constrained rows hold x_i = g_i exactly from the first iterate, so
        // measure the tolerance against the free part of the rhs only.
        double total = 0.0;
        for (double x : br) total += x * x;
        SolveOptions scaled = opts;
        if (total > 0.0 && r.rhs_norm > 0.0) scaled.tol = opts.tol * r.rhs_norm / std::sqrt(total);
        report = solve_spd(ar, br, v, scaled);
        if (!report.converged) {
            throw SolverError(fmt::format("phase-field solve did not converge: residual {:.3e} after {} iterations",
                                          report.relative_residual, report.iterations));
        }
    } else {
        report = {};
        report.converged = true;
    }
    r.gradient = a * v;
    for (std::size_t i = 0; i < n; ++i) r.gradient[i] -= b[i];
    return r;
}

double stationarity(const Reduced& r, const std::vector<char>& free) {
    double m = 0.0;
    for (std::size_t i = 0; i < free.size(); ++i)
        if (free[i]) m = std::max(m, std::abs(r.gradient[i]));
    return r.rhs_norm > 0.0 ? m / r.rhs_norm : m;
}

} // namespace

PhaseFieldResult solve_phasefield(const P1Space& space, const FeFunction& u,
                                  const MaterialParams& params, const CrackSet& crack,
                                  const PhaseFieldOptions& opts, const FeFunction* v_guess) {
    require_generation(space.tag(), u.tag, "displacement");
    require_generation(space.tag(), crack.tag, "crack set");
    if (v_guess) require_generation(space.tag(), v_guess->tag, "phase-field guess");

    const std::size_t n = static_cast<std::size_t>(space.num_dofs());
    SparseMatrix a;
    std::vector<double> b;
    phasefield_system(space, u, params, a, b);

    PhaseFieldResult res;
    res.v = FeFunction(space.mesh(), 1.0);
    if (v_guess) res.v.values = v_guess->values;
    auto& v = res.v.values;

    const auto c = reaction_coefficients(space, u, params);
    const bool no_reaction = std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; });
    if (no_reaction && crack.count() == 0) {
        // Pure Neumann problem with a positive source: no critical point
        // exists, and v = 1 is the minimiser under v <= 1.
        std::fill(v.begin(), v.end(), 1.0);
        res.degenerate = true;
        res.free.assign(n, 0);
        res.upper_active = static_cast<int>(n);
        return res;
    }

    std::vector<double> value(n, 0.0);
    std::vector<char> fixed(n, 0);
    for (std::size_t i = 0; i < n; ++i) fixed[i] = crack.pinned[i];

    if (opts.mode == PhaseFieldMode::Linear) {
        const Reduced r = solve_reduced(a, b, fixed, value, v, opts.solver, res.report);
        res.free.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) res.free[i] = !fixed[i];
        res.stationarity = stationarity(r, res.free);
        return res;
    }

    double bscale = 0.0;
    for (double x : b) bscale = std::max(bscale, std::abs(x));
    const double release_tol = 1e-12 * bscale;
    const double activate_tol = 1e-12;

    std::vector<char> active(n, 0);
    for (std::size_t i = 0; i < n; ++i) active[i] = !crack.pinned[i] && v[i] >= 1.0;

    Reduced r;
    res.active_set_converged = false;
    for (int it = 1; it <= opts.max_active_set_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            fixed[i] = crack.pinned[i] || active[i];
            value[i] = crack.pinned[i] ? 0.0 : 1.0;
        }
        r = solve_reduced(a, b, fixed, value, v, opts.solver, res.report);
        res.active_set_iters = it;

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (crack.pinned[i]) continue;
            const bool next = active[i] ? r.gradient[i] <= release_tol : v[i] > 1.0 + activate_tol;
            if (next != static_cast<bool>(active[i])) {
                active[i] = next;
                changed = true;
            }
        }
        if (!changed) {
            res.active_set_converged = true;
            break;
        }
    }
    if (!res.active_set_converged) {
        spdlog::warn("phase-field active set did not settle within {} iterations", opts.max_active_set_iters);
    }
    res.free.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        res.free[i] = !fixed[i];
        res.upper_active += (fixed[i] && !crack.pinned[i]) ? 1 : 0;
    }
    res.stationarity = stationarity(r, res.free);
    return res;
}

FeFunction clamp_and_threshold(const FeFunction& v, double xi_v) {
    FeFunction out = v;
    for (double& x : out.values) {
        if (x < xi_v) x = 0.0;
        else if (x > 1.0) x = 1.0;
    }
    return out;
}

CrackSet update_crack_set(const FeFunction& v, const Mesh& mesh, double xi_cr, const CrackSet& old) {
    require_generation(mesh.tag(), v.tag, "phase field");
    require_generation(mesh.tag(), old.tag, "crack set");
    CrackSet out = old;
    out.tol = xi_cr;
    for (const Edge& e : mesh.edges()) {
        if (v.values[e.a] <= xi_cr && v.values[e.b] <= xi_cr) {
            out.pinned[e.a] = 1;
            out.pinned[e.b] = 1;
        }
    }
    return out;
}

CrackSet transfer_crack_set(const CrackSet& old, const Mesh& src_mesh, const Mesh& dst_mesh) {
    require_generation(src_mesh.tag(), old.tag, "crack set");
    if (dst_mesh.tag() == src_mesh.tag()) return old;
    if (!dst_mesh.parent_tag() || !(*dst_mesh.parent_tag() == src_mesh.tag())) {
        throw GenerationMismatch(fmt::format("mesh {} was not adapted from {}", to_string(dst_mesh.tag()),
                                             to_string(src_mesh.tag())));
    }
    CrackSet out(dst_mesh, old.tol);
    const auto origins = dst_mesh.vertex_origins();
    for (std::size_t i = 0; i < origins.size(); ++i) {
        const auto& o = origins[i];
        out.pinned[i] = old.pinned[o.a] && old.pinned[o.b];
    }
    return out;
}

double phasefield_energy(const P1Space& space, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params) {
    require_generation(space.tag(), v.tag, "phase field");
    const auto c = reaction_coefficients(space, u, params);
    const auto gv = space.gradients(v.values);
    const Mesh& mesh = space.mesh();
    double e = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double a = v.values[tri[0]], b = v.values[tri[1]], d = v.values[tri[2]];
        const double mean = (a + b + d) / 3.0;
        e += space.area(t) * (0.5 * params.rho_pf() * dot(gv[t], gv[t]) + params.nu_pf() * (1.0 - mean) +
                              0.5 * c[t] * mean_square(a, b, d));
    }
    return e;
}

std::vector<double> phasefield_gradient(const P1Space& space, const FeFunction& u,
                                        const FeFunction& v, const MaterialParams& params) {
    require_generation(space.tag(), v.tag, "phase field");
    SparseMatrix a;
    std::vector<double> b;
    phasefield_system(space, u, params, a, b);
    auto g = a * v.values;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b[i];
    return g;
}

} // namespace afem
