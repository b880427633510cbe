#pragma once

#include <vector>

#include "afem/fem.hpp"
#include "afem/linsolve.hpp"
#include "afem/material.hpp"

namespace afem {

/// Vertices whose phase field is pinned to 0 for the rest of the run.
struct CrackSet {
    std::vector<char> pinned;  // one flag per vertex
    MeshTag tag{};
    double tol = 1e-2;

    CrackSet() = default;
    CrackSet(const Mesh& mesh, double tol) : pinned(mesh.num_vertices(), 0), tag(mesh.tag()), tol(tol) {}

    bool contains(int v) const { return pinned[v] != 0; }
    int count() const;
    std::vector<int> ids() const;
};

enum class PhaseFieldMode {
    /// One solve of the stationarity system, bounds applied afterwards.
    Linear,
    /// Minimisation under v <= 1 by a primal-dual active set loop.
    UpperObstacle,
};

struct PhaseFieldOptions {
    PhaseFieldMode mode = PhaseFieldMode::UpperObstacle;
    SolveOptions solver{};
    int max_active_set_iters = 100;
};

struct PhaseFieldResult {
    FeFunction v;
    SolveReport report;         // last linear solve
    int active_set_iters = 0;
    bool active_set_converged = true;
    int upper_active = 0;       // dofs held at v = 1
    /// No crack dofs and no reaction: the system is singular and v = 1 is returned.
    bool degenerate = false;
    /// max over free dofs of |J'(u; v)(phi_i)| divided by the reduced rhs 2-norm.
    double stationarity = 0.0;
    std::vector<char> free;     // dofs that were solved for
};

/// Per-element reaction coefficient mu (1 - kappa) |grad u|^2.
std::vector<double> reaction_coefficients(const P1Space& space, const FeFunction& u,
                                          const MaterialParams& params);

/// Unconstrained operator and rhs of the stationarity condition:
/// (rho_pf grad v, grad phi) + (c v, phi) = (nu_pf, phi).
void phasefield_system(const P1Space& space, const FeFunction& u, const MaterialParams& params,
                       SparseMatrix& a, std::vector<double>& b);

PhaseFieldResult solve_phasefield(const P1Space& space, const FeFunction& u,
                                  const MaterialParams& params, const CrackSet& crack,
                                  const PhaseFieldOptions& opts = {},
                                  const FeFunction* v_guess = nullptr);

/// Values below xi_v become 0, values above 1 become 1.
FeFunction clamp_and_threshold(const FeFunction& v, double xi_v);

/// old plus both endpoints of every edge whose endpoint values are <= xi_cr.
CrackSet update_crack_set(const FeFunction& v, const Mesh& mesh, double xi_cr, const CrackSet& old);

/// Carries pins to the successor mesh: a midpoint is pinned when both
/// endpoints of its parent edge were.
CrackSet transfer_crack_set(const CrackSet& old, const Mesh& src_mesh, const Mesh& dst_mesh);

/// J(u; v) = int rho_pf/2 |grad v|^2 + nu_pf (1 - v) + mu (1 - kappa)/2 v^2 |grad u|^2.
double phasefield_energy(const P1Space& space, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params);

/// J'(u; v)(phi_i) for every basis function.
std::vector<double> phasefield_gradient(const P1Space& space, const FeFunction& u,
                                        const FeFunction& v, const MaterialParams& params);

} // namespace afem
