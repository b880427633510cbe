#include "afem/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"

namespace afem {

void MaterialParams::validate() const {
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(fmt::format("{} must be positive, got {}", name, x));
    };
    positive(mu, "mu");
    positive(density, "density");
    positive(viscosity, "viscosity");
    positive(kappa, "kappa");
    positive(lambda_c, "lambda_c");
    positive(c_w, "c_w");
    positive(epsilon, "epsilon");
    if (kappa >= 1.0) throw ConfigError(fmt::format("kappa must be below 1, got {}", kappa));
}

double g0(double t, const LoadingParams& p) {
    if (t < 0.0 || t > p.t_g) {
        throw std::domain_error(fmt::format("loading time {} outside [0, {}]", t, p.t_g));
    }
    if (t <= p.t_s) return p.eps_v * t * t / (2.0 * p.t_s);
    return p.eps_v * t - p.eps_v * p.t_s / 2.0;
}

double boundary_displacement(double t, Point x, const LoadingParams& p) {
    const double g = g0(t, p);
    if (x.y > p.slit_y) return g;
    if (x.y < p.slit_y) return -g;
    return 0.0;
}

DynamicState init_state(const Mesh& mesh, const FeFunction& u0, const FeFunction& u1, double k,
                        double crack_tol) {
    require_generation(mesh.tag(), u0.tag, "initial displacement");
    require_generation(mesh.tag(), u1.tag, "initial velocity");
    if (!(k > 0.0)) throw std::invalid_argument("time step must be positive");
    DynamicState s;
    s.n = 1;
    s.tag = mesh.tag();
    s.u_prev = u0;
    s.du = u1;
    s.u_curr = u0;
    for (std::size_t i = 0; i < s.u_curr.size(); ++i) s.u_curr[i] += k * u1[i];
    s.v = FeFunction(mesh, 1.0);
    s.crack = CrackSet(mesh, crack_tol);
    return s;
}

std::vector<double> degraded_coefficients(const P1Space& space, const FeFunction& v,
                                          const MaterialParams& params, double scale) {
    require_generation(space.tag(), v.tag, "phase field");
    const Mesh& mesh = space.mesh();
    std::vector<double> c(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double q = mean_square(v[tri[0]], v[tri[1]], v[tri[2]]);
        c[t] = scale * params.mu * ((1.0 - params.kappa) * q + params.kappa);
    }
    return c;
}

DisplacementStep step_displacement(const P1Space& space, const DynamicState& state,
                                   const MaterialParams& params, double k, const DirichletSet& g,
                                   const FeFunction& f, const SolveOptions& opts) {
    require_generation(space.tag(), state.tag, "dynamic state");
    require_generation(space.tag(), f.tag, "body force");
    if (!(k > 0.0)) throw std::invalid_argument("time step must be positive");

    const double rho = params.density;
    const double eta = params.viscosity;
    // A(a) with mu folded in; the viscous part carries eta / (k mu).
    const SparseMatrix a = space.stiffness(degraded_coefficients(space, state.v, params));
    const SparseMatrix& m = space.unit_mass();
    const SparseMatrix sys = SparseMatrix::combine(rho / (k * k), m, 1.0 + eta / (k * params.mu), a);

    const auto& up = state.u_curr.values;
    const auto& dup = state.du.values;
    const std::size_t n = up.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = (rho / (k * k)) * up[i] + (rho / k) * dup[i];
    std::vector<double> rhs = m * w;
    const std::vector<double> au = a * up;
    const std::vector<double> mf = m * f.values;
    for (std::size_t i = 0; i < n; ++i) rhs[i] += (eta / (k * params.mu)) * au[i] + mf[i];

    DisplacementStep out;
    out.u = FeFunction(space.mesh());
    auto& x = out.u.values;
    for (std::size_t i = 0; i < n; ++i) x[i] = up[i] + k * dup[i];
    for (const auto& [d, val] : g.entries()) x[d] = val;

    SparseMatrix sys_c = sys;
    std::vector<double> rhs_c = rhs;
    apply_dirichlet(sys_c, rhs_c, g);
    out.report = solve_spd(sys_c, rhs_c, x, opts);
    if (!out.report.converged) {
        throw SolverError(fmt::format("displacement solve did not converge: residual {:.3e} after {} iterations",
                                      out.report.relative_residual, out.report.iterations));
    }

    const std::vector<double> r = sys * x;
    for (const auto& [d, val] : g.entries()) out.boundary_work += (r[d] - rhs[d]) * (x[d] - up[d]);
    return out;
}

DirichletSet loading_dirichlet(const Mesh& mesh, double t, const LoadingParams& p) {
    const double g = g0(t, p);
    DirichletSet ds;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const bool up = mesh.vertex_has_label(v, BoundaryLabel::LeftUpper);
        const bool lo = mesh.vertex_has_label(v, BoundaryLabel::LeftLower);
        if (up && lo) ds.add(v, 0.0);
        else if (up) ds.add(v, g);
        else if (lo) ds.add(v, -g);
    }
    return ds;
}

} // namespace afem
