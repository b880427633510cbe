#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "afem/fem.hpp"
#include "afem/material.hpp"
#include "afem/phasefield.hpp"

namespace afem {

enum class JumpKind {
    /// |grad v| on one side minus |grad v| on the other; grad v . n on the boundary.
    GradientMagnitude,
    /// (grad v_1 - grad v_2) . n on interior edges; grad v . n on the boundary.
    NormalFlux,
};

struct EstimatorOptions {
    JumpKind jump = JumpKind::GradientMagnitude;
    /// Drop the element residual where the bounds decide v: all three nodes
    /// at v = 1 with a non-positive residual, or all three pinned to 0.
    bool skip_constrained = false;
    const CrackSet* crack = nullptr;
};

struct EstimatorField {
    std::vector<double> r2;  // R_tau^2 per triangle
    double total = 0.0;      // R_h
    double min = 0.0;        // min R_tau
    double max = 0.0;        // max R_tau
    MeshTag tag{};
};

EstimatorField estimate(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                        const MaterialParams& params, const EstimatorOptions& opts = {});

/// Smallest set carrying theta of the total, greedy by (R^2 descending, id ascending).
std::vector<int> dorfler_mark(const EstimatorField& est, double theta);

/// Top ceil(refine_frac N) and bottom floor(coarsen_frac N) in the same ordering.
std::pair<std::vector<int>, std::vector<int>> fraction_mark(const EstimatorField& est, double refine_frac,
                                                            double coarsen_frac);

/// |J'(u; v)(phi)| / (R_h ||grad phi||) for a discrete trial function.
double reliability_ratio(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params, const FeFunction& phi,
                         const EstimatorOptions& opts = {});

/// Same for a smooth trial function, integrated with a degree-5 rule.
double reliability_ratio(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params, const std::function<double(Point)>& phi,
                         const std::function<Point(Point)>& grad_phi, const EstimatorOptions& opts = {});

} // namespace afem
