#include "afem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"
#include "afem/parallel.hpp"

namespace afem {

namespace {

std::vector<int> ranking(const std::vector<double>& r2) {
    std::vector<int> order(r2.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r2[a] > r2[b]; });
    return order;
}

} // namespace

EstimatorField estimate(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                        const MaterialParams& params, const EstimatorOptions& opts) {
    require_generation(mesh.tag(), u.tag, "displacement");
    require_generation(mesh.tag(), v.tag, "phase field");
    if (opts.crack) require_generation(mesh.tag(), opts.crack->tag, "crack set");

    const P1Space space(mesh);
    const auto gu = space.gradients(u.values);
    const auto gv = space.gradients(v.values);
    const auto geo = geometry(mesh);
    const int nt = mesh.num_triangles();
    const double rho = params.rho_pf();
    const double nu = params.nu_pf();
    const double react = params.mu * (1.0 - params.kappa);

    EstimatorField est;
    est.tag = mesh.tag();
    est.r2.assign(nt, 0.0);

    parallel_for(nt, 1024, [&](std::size_t b, std::size_t e) {
        for (std::size_t tt = b; tt < e; ++tt) {
            const int t = static_cast<int>(tt);
            const auto& tri = mesh.triangle(t);
            const double a = react * dot(gu[t], gu[t]);
            if (opts.skip_constrained) {
                bool at_one = a - nu <= 0.0;
                bool pinned = opts.crack != nullptr;
                for (int i = 0; i < 3; ++i) {
                    at_one = at_one && v[tri[i]] == 1.0;
                    pinned = pinned && opts.crack->contains(tri[i]);
                }
                if (at_one || pinned) continue;
            }
            double integral = 0.0;
            for (const auto& q : triangle_rule_degree2()) {
                const double vq = q.bary[0] * v[tri[0]] + q.bary[1] * v[tri[1]] + q.bary[2] * v[tri[2]];
                const double r = a * vq - nu;
                integral += q.weight * r * r;
            }
            est.r2[t] = geo[t].diameter * geo[t].diameter * geo[t].area * integral;
        }
    });

    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        const Point d = mesh.vertex(edge.b) - mesh.vertex(edge.a);
        const double he2 = dot(d, d);
        const int t0 = edge.tri[0];
        const Point n0 = geo[t0].normal[edge.local[0]];
        if (edge.is_boundary()) {
            const double j = dot(gv[t0], n0);
            est.r2[t0] += rho * rho * he2 * j * j;
            continue;
        }
        const int t1 = edge.tri[1];
        double j = 0.0;
        if (opts.jump == JumpKind::GradientMagnitude) {
            const int hi = std::max(t0, t1), lo = std::min(t0, t1);
            j = std::sqrt(dot(gv[hi], gv[hi])) - std::sqrt(dot(gv[lo], gv[lo]));
        } else {
            j = dot(gv[t0] - gv[t1], n0);
        }
        const double c = 0.5 * rho * rho * he2 * j * j;
        est.r2[t0] += c;
        est.r2[t1] += c;
    }

    double sum = 0.0;
    est.min = nt > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    for (double x : est.r2) {
        sum += x;
        est.min = std::min(est.min, std::sqrt(x));
        est.max = std::max(est.max, std::sqrt(x));
    }
    est.total = std::sqrt(sum);
    return est;
}

std::vector<int> dorfler_mark(const EstimatorField& est, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
    const auto order = ranking(est.r2);
    double total = 0.0;
    for (int t : order) total += est.r2[t];
    std::vector<int> marked;
    if (total <= 0.0) return marked;
    const double goal = theta * total;
    double acc = 0.0;
    for (int t : order) {
        if (acc >= goal || est.r2[t] <= 0.0) break;
        marked.push_back(t);
        acc += est.r2[t];
    }
    return marked;
}

std::pair<std::vector<int>, std::vector<int>> fraction_mark(const EstimatorField& est, double refine_frac,
                                                            double coarsen_frac) {
    if (!(refine_frac >= 0.0 && refine_frac <= 1.0 && coarsen_frac >= 0.0 && coarsen_frac <= 1.0) ||
        refine_frac + coarsen_frac > 1.0 + 1e-12) {
        throw std::invalid_argument("marking fractions must lie in [0, 1] and sum to at most 1");
    }
    const auto order = ranking(est.r2);
    const double n = static_cast<double>(order.size());
    const auto nr = static_cast<std::size_t>(std::ceil(refine_frac * n - 1e-9));
    const auto nc = static_cast<std::size_t>(std::floor(coarsen_frac * n + 1e-9));
    std::vector<int> refine(order.begin(), order.begin() + std::min(nr, order.size()));
    std::vector<int> coarsen;
    for (std::size_t i = order.size() - std::min(nc, order.size() - refine.size()); i < order.size(); ++i) {
        coarsen.push_back(order[i]);
    }
    return {refine, coarsen};
}

double reliability_ratio(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params, const FeFunction& phi, const EstimatorOptions& opts) {
    require_generation(mesh.tag(), phi.tag, "trial function");
    const P1Space space(mesh);
    const auto g = phasefield_gradient(space, u, v, params);
    double num = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) num += g[i] * phi[i];
    const auto gp = space.gradients(phi.values);
    double den = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) den += space.area(t) * dot(gp[t], gp[t]);
    if (!(den > 0.0)) throw std::invalid_argument("trial function has zero gradient");
    const double rh = estimate(mesh, u, v, params, opts).total;
    return std::abs(num) / (rh * std::sqrt(den));
}

double reliability_ratio(const Mesh& mesh, const FeFunction& u, const FeFunction& v,
                         const MaterialParams& params, const std::function<double(Point)>& phi,
                         const std::function<Point(Point)>& grad_phi, const EstimatorOptions& opts) {
    const P1Space space(mesh);
    const auto gu = space.gradients(u.values);
    const auto gv = space.gradients(v.values);
    const double rho = params.rho_pf();
    const double nu = params.nu_pf();
    double num = 0.0, den = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto p = mesh.corners(t);
        const auto& tri = mesh.triangle(t);
        const double a = params.mu * (1.0 - params.kappa) * dot(gu[t], gu[t]);
        for (const auto& q : triangle_rule_degree5()) {
            const Point x = q.bary[0] * p[0] + q.bary[1] * p[1] + q.bary[2] * p[2];
            const double vq = q.bary[0] * v[tri[0]] + q.bary[1] * v[tri[1]] + q.bary[2] * v[tri[2]];
            const Point gp = grad_phi(x);
            const double w = q.weight * space.area(t);
            num += w * (rho * dot(gv[t], gp) - nu * phi(x) + a * vq * phi(x));
            den += w * dot(gp, gp);
        }
    }
    if (!(den > 0.0)) throw std::invalid_argument("trial function has zero gradient");
    const double rh = estimate(mesh, u, v, params, opts).total;
    return std::abs(num) / (rh * std::sqrt(den));
}

} // namespace afem
