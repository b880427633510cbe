#pragma once

#include "afem/fem.hpp"
#include "afem/linsolve.hpp"
#include "afem/material.hpp"
#include "afem/phasefield.hpp"

namespace afem {

/// One staggered snapshot: u^{n-1}, u^n, du^n = (u^n - u^{n-1}) / k and v^n.
struct DynamicState {
    int n = 0;
    FeFunction u_prev;
    FeFunction u_curr;
    FeFunction du;
    FeFunction v;
    CrackSet crack;
    MeshTag tag{};
};

/// u_prev = u0, du = u1, u_curr = u0 + k u1, v = 1, no crack, n = 1.
DynamicState init_state(const Mesh& mesh, const FeFunction& u0, const FeFunction& u1, double k,
                        double crack_tol = 1e-2);

/// Per-element stiffness weight mu * ((1 - kappa) mean(v^2) + kappa) (exact for linear v),
/// scaled by `scale`.
std::vector<double> degraded_coefficients(const P1Space& space, const FeFunction& v,
                                          const MaterialParams& params, double scale = 1.0);

struct DisplacementStep {
    FeFunction u;
    SolveReport report;
    /// Sum over Dirichlet dofs of reaction times (u^n - u^{n-1}).
    double boundary_work = 0.0;
};

/// Implicit step of the damped wave equation with v frozen at state.v:
/// [ (rho/k^2) M + (mu + eta/k) A(a) ] u^n
///     = (rho/k^2) M u^{n-1} + (rho/k) M du^{n-1} + (eta/k) A(a) u^{n-1} + M f.
/// state.u_curr is read as u^{n-1} and state.du as du^{n-1}.
DisplacementStep step_displacement(const P1Space& space, const DynamicState& state,
                                   const MaterialParams& params, double k, const DirichletSet& g,
                                   const FeFunction& f, const SolveOptions& opts = {});

/// +g0 on vertices of the upper left edge, -g0 on the lower left edge;
/// 0 on the point where the two meet without a slit.
DirichletSet loading_dirichlet(const Mesh& mesh, double t, const LoadingParams& p);

/// g(t, x) = g0(t) sgn(x.y - slit_y).
double boundary_displacement(double t, Point x, const LoadingParams& p);

} // namespace afem
