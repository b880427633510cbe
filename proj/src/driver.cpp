#include "afem/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <json.hpp>

#include "afem/error.hpp"
#include "afem/parallel.hpp"
#include "afem/simd.hpp"
#include "afem/version.hpp"

namespace afem {

namespace {

constexpr std::size_t kMaxStoredWarnings = 100;

template <class F>
auto in_phase(int step, const char* phase, F&& f) {
    try {
        return f();
    } catch (const RunError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunError(fmt::format("step {}, {}: {}", step, phase, e.what()), step, phase);
    }
}

DynamicState transfer_state(const DynamicState& s, const Mesh& src, const Mesh& dst) {
    DynamicState out;
    out.n = s.n;
    out.tag = dst.tag();
    out.u_prev = transfer(s.u_prev, src, dst);
    out.u_curr = transfer(s.u_curr, src, dst);
    out.du = transfer(s.du, src, dst);
    out.v = transfer(s.v, src, dst);
    out.crack = transfer_crack_set(s.crack, src, dst);
    return out;
}

} // namespace

EnergyReport energies(const P1Space& space, const DynamicState& state, const MaterialParams& params) {
    require_generation(space.tag(), state.tag, "dynamic state");
    const Mesh& mesh = space.mesh();
    EnergyReport r;
    const auto mdu = space.unit_mass() * state.du.values;
    double kin = 0.0;
    for (std::size_t i = 0; i < mdu.size(); ++i) kin += mdu[i] * state.du[i];
    r.kinetic = 0.5 * params.density * kin;

    const auto gu = space.gradients(state.u_curr.values);
    const auto gv = space.gradients(state.v.values);
    double strain = 0.0, h = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double a = state.v[tri[0]], b = state.v[tri[1]], c = state.v[tri[2]];
        const double coeff = (1.0 - params.kappa) * mean_square(a, b, c) + params.kappa;
        strain += space.area(t) * coeff * dot(gu[t], gu[t]);
        const double mean = (a + b + c) / 3.0;
        h += space.area(t) * ((1.0 - mean) / params.epsilon + params.epsilon * dot(gv[t], gv[t]));
    }
    r.strain = 0.5 * params.mu * strain;
    r.surface = params.lambda_c / params.c_w * h;
    r.total = r.kinetic + r.strain + r.surface;
    r.ndofs = mesh.num_vertices();
    r.ncells = mesh.num_triangles();
    return r;
}

Simulation::Simulation(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    mat_ = cfg_.material();
    load_ = cfg_.loading();
    set_mesh(build_initial_mesh(cfg_.domain(), cfg_.slit_geometry(), cfg_.n0, 2 * cfg_.max_levels));
    const FeFunction zero(*mesh_);
    state_ = init_state(*mesh_, zero, zero, cfg_.time_step(), cfg_.xi_cr);
}

Simulation::Simulation(RunConfig cfg, Mesh mesh, DynamicState state) : cfg_(std::move(cfg)) {
    cfg_.validate();
    mat_ = cfg_.material();
    load_ = cfg_.loading();
    set_mesh(std::move(mesh));
    require_generation(mesh_->tag(), state.tag, "initial state");
    state_ = std::move(state);
}

void Simulation::set_mesh(Mesh mesh) {
    auto m = std::make_unique<Mesh>(std::move(mesh));
    space_ = std::make_unique<P1Space>(*m);
    mesh_ = std::move(m);
}

void Simulation::warn(std::string msg) {
    spdlog::warn("{}", msg);
    ++summary_.warning_count;
    if (summary_.warnings.size() < kMaxStoredWarnings) summary_.warnings.push_back(std::move(msg));
}

DynamicState Simulation::staggered_step(const DynamicState& from, double t, StepRecord& rec) const {
    const double k = cfg_.time_step();
    const DirichletSet g = loading_dirichlet(*mesh_, t, load_);
    const FeFunction f(*mesh_);
    SolveOptions sopts;
    sopts.tol = cfg_.solver_tol;
    sopts.max_iter = cfg_.solver_max_iter;
    PhaseFieldOptions popts;
    popts.mode = cfg_.phasefield_mode;
    popts.solver = sopts;

    DynamicState trial = from;
    FeFunction u_new;
    rec.inner_converged = false;
    rec.active_set_converged = true;
    for (int j = 1; j <= cfg_.max_inner_iters; ++j) {
        DisplacementStep d = step_displacement(*space_, trial, mat_, k, g, f, sopts);
        const PhaseFieldResult pf = solve_phasefield(*space_, d.u, mat_, from.crack, popts, &trial.v);
        rec.max_stationarity = std::max(rec.max_stationarity, pf.stationarity);
        rec.active_set_converged = rec.active_set_converged && pf.active_set_converged;
        FeFunction v_new = clamp_and_threshold(pf.v, cfg_.xi_v);
        const double change = simd::max_abs_diff(v_new.values, trial.v.values);
        trial.v = std::move(v_new);
        u_new = std::move(d.u);
        rec.boundary_work = d.boundary_work;
        rec.inner_iters = j;
        if (change < cfg_.xi_vn) {
            rec.inner_converged = true;
            break;
        }
    }

    DynamicState out;
    out.n = from.n + 1;
    out.tag = from.tag;
    out.u_prev = from.u_curr;
    out.du = u_new;
    for (std::size_t i = 0; i < out.du.size(); ++i) out.du[i] = (u_new[i] - from.u_curr[i]) / k;
    out.u_curr = std::move(u_new);
    out.v = std::move(trial.v);
    out.crack = from.crack;
    return out;
}

const StepRecord& Simulation::advance() {
    if (finished()) throw std::logic_error("simulation already finished");
    const int n = steps_done() + 1;
    const double k = cfg_.time_step();
    const double t = n * k;
    StepRecord rec;
    rec.step = n;
    rec.time = t;

    EstimatorOptions eopts;
    eopts.jump = cfg_.estimator_jump;
    eopts.skip_constrained = cfg_.skip_constrained;

    if (n == 1) {
        in_phase(n, "initial phase-field solve", [&] {
            const DirichletSet g = loading_dirichlet(*mesh_, t, load_);
            for (const auto& [d, val] : g.entries()) state_.u_curr[d] = val;
            for (std::size_t i = 0; i < state_.du.size(); ++i) {
                state_.du[i] = (state_.u_curr[i] - state_.u_prev[i]) / k;
            }
            PhaseFieldOptions popts;
            popts.mode = cfg_.phasefield_mode;
            popts.solver.tol = cfg_.solver_tol;
            popts.solver.max_iter = cfg_.solver_max_iter;
            const auto pf = solve_phasefield(*space_, state_.u_curr, mat_, state_.crack, popts, &state_.v);
            rec.max_stationarity = pf.stationarity;
            rec.active_set_converged = pf.active_set_converged;
            state_.v = clamp_and_threshold(pf.v, cfg_.xi_v);
            rec.inner_iters = 1;
            return 0;
        });
        eopts.crack = &state_.crack;
        est_ = in_phase(n, "estimate", [&] { return estimate(*mesh_, state_.u_curr, state_.v, mat_, eopts); });
    } else {
        const DynamicState pre = state_;
        EnergyReport before = energies(*space_, pre, mat_);
        DynamicState next = in_phase(n, "staggered solve", [&] { return staggered_step(pre, t, rec); });
        eopts.crack = &next.crack;
        est_ = in_phase(n, "estimate", [&] { return estimate(*mesh_, next.u_curr, next.v, mat_, eopts); });

        if (cfg_.adapt && est_.total > cfg_.xi_rf) {
            in_phase(n, "adapt", [&] {
                std::vector<int> refine, coarsen;
                if (cfg_.strategy == MarkingStrategy::Fraction) {
                    std::tie(refine, coarsen) = fraction_mark(est_, cfg_.refine_fraction, cfg_.coarsen_fraction);
                } else {
                    refine = dorfler_mark(est_, cfg_.theta);
                    coarsen = fraction_mark(est_, 0.0, cfg_.coarsen_fraction).second;
                    std::erase_if(coarsen, [&](int c) {
                        return std::find(refine.begin(), refine.end(), c) != refine.end();
                    });
                }
                const double cut = cfg_.cell_threshold * cfg_.cell_threshold;
                std::erase_if(refine, [&](int c) { return est_.r2[c] <= cut; });
                // coarsening removes the newest vertex of a patch; pinned vertices stay
                std::erase_if(coarsen, [&](int c) { return pre.crack.contains(mesh_->triangle(c)[0]); });
                rec.refine_marked = static_cast<int>(refine.size());
                rec.coarsen_marked = static_cast<int>(coarsen.size());
                if (refine.empty() && coarsen.empty()) return 0;
                AdaptSummary as;
                Mesh fresh = adapt(*mesh_, refine, coarsen, &as);
                if (as.bisections == 0 && as.vertices_removed == 0) return 0;
                rec.adapted = true;
                rec.adapt = as;
                const DynamicState moved = transfer_state(pre, *mesh_, fresh);
                set_mesh(std::move(fresh));
                before = energies(*space_, moved, mat_);
                StepRecord again;
                again.step = n;
                again.time = t;
                next = staggered_step(moved, t, again);
                again.adapted = true;
                again.adapt = as;
                again.refine_marked = rec.refine_marked;
                again.coarsen_marked = rec.coarsen_marked;
                again.max_stationarity = std::max(again.max_stationarity, rec.max_stationarity);
                rec = again;
                eopts.crack = &next.crack;
                est_ = estimate(*mesh_, next.u_curr, next.v, mat_, eopts);
                return 0;
            });
        }
        state_ = std::move(next);
        const EnergyReport after = energies(*space_, state_, mat_);
        rec.ledger_excess = after.total - before.total - rec.boundary_work;
        const double scale = std::max({1.0, after.total, before.total, std::abs(rec.boundary_work)});
        summary_.max_ledger_excess = std::max(summary_.max_ledger_excess, rec.ledger_excess / scale);
        if (rec.ledger_excess > 1e-8 * scale) ++summary_.ledger_violations;
        if (!rec.inner_converged) {
            ++summary_.inner_not_converged;
            warn(fmt::format("step {}: staggered iteration stopped after {} sweeps", n, rec.inner_iters));
        }
    }
    if (!rec.active_set_converged) ++summary_.active_set_not_converged;

    // irreversibility: pin cracked edges for the following steps
    const int before_pins = state_.crack.count();
    state_.crack = update_crack_set(state_.v, *mesh_, cfg_.xi_cr, state_.crack);
    for (std::size_t i = 0; i < state_.v.size(); ++i)
        if (state_.crack.pinned[i]) state_.v[i] = 0.0;
    rec.newly_pinned = state_.crack.count() - before_pins;
    if (summary_.first_damage_step < 0 && state_.crack.count() > 0) {
        summary_.first_damage_step = n;
        for (int id : state_.crack.ids()) summary_.first_pinned.push_back(mesh_->vertex(id));
    }

    rec.energy = energies(*space_, state_, mat_);
    rec.energy.step = n;
    rec.energy.time = t;
    rec.energy.estimator = est_.total;
    rec.energy.est_min = est_.min;
    rec.energy.est_max = est_.max;
    if (!trace_.empty()) {
        const double prev = trace_.back().surface;
        if (rec.energy.surface < prev - 1e-10 * std::max(1.0, prev)) {
            if (summary_.surface_decreases++ == 0) {
                summary_.first_surface_decrease = n;
                warn(fmt::format("step {}: surface energy decreased from {:.6e} to {:.6e}", n, prev,
                                 rec.energy.surface));
            }
        }
    }
    trace_.push_back(rec.energy);

    summary_.steps = n;
    summary_.final_cells = mesh_->num_triangles();
    summary_.final_dofs = mesh_->num_vertices();
    summary_.max_cells = std::max(summary_.max_cells, summary_.final_cells);
    summary_.adapt_events += rec.adapted ? 1 : 0;
    summary_.max_stationarity = std::max(summary_.max_stationarity, rec.max_stationarity);
    last_ = rec;
    return last_;
}

EnergyReport Simulation::energy_report() const { return energies(*space_, state_, mat_); }

Snapshot Simulation::snapshot() const {
    Snapshot s;
    s.step = steps_done();
    s.time = s.step * cfg_.time_step();
    s.mesh = mesh_.get();
    s.u = state_.u_curr;
    s.du = state_.du;
    s.v = state_.v;
    s.stress_proxy = stress_proxy(*space_, state_.u_curr, state_.v, mat_.kappa);
    s.estimator = est_.tag == mesh_->tag() ? est_.r2 : std::vector<double>(mesh_->num_triangles(), 0.0);
    return s;
}

namespace {

nlohmann::json summary_json(const RunConfig& cfg, const Simulation& sim, const RunSummary& s) {
    nlohmann::json j;
    j["version"] = std::string(kVersion);
    j["steps"] = s.steps;
    j["time_step"] = cfg.time_step();
    j["final_cells"] = s.final_cells;
    j["final_dofs"] = s.final_dofs;
    j["max_cells"] = s.max_cells;
    j["adapt_events"] = s.adapt_events;
    j["wall_seconds"] = s.wall_seconds;
    j["threads"] = worker_count();
    j["simd"] = std::string(simd::isa_name(simd::kernels().isa));
    const auto& m = sim.material();
    j["material"] = {{"mu", m.mu},           {"density", m.density},   {"viscosity", m.viscosity},
                     {"kappa", m.kappa},     {"lambda_c", m.lambda_c}, {"c_w", m.c_w},
                     {"epsilon", m.epsilon}, {"rho_pf", m.rho_pf()},   {"nu_pf", m.nu_pf()},
                     {"h_f", cfg.h_f()}};
    j["diagnostics"] = {{"inner_not_converged", s.inner_not_converged},
                        {"active_set_not_converged", s.active_set_not_converged},
                        {"max_stationarity", s.max_stationarity},
                        {"ledger_violations", s.ledger_violations},
                        {"max_ledger_excess", s.max_ledger_excess},
                        {"surface_decreases", s.surface_decreases},
                        {"first_surface_decrease", s.first_surface_decrease}};
    j["first_damage_step"] = s.first_damage_step;
    nlohmann::json pts = nlohmann::json::array();
    for (const Point& p : s.first_pinned) pts.push_back({p.x, p.y});
    j["first_pinned"] = pts;
    j["warning_count"] = s.warning_count;
    j["warnings"] = s.warnings;
    j["config"] = write_config(cfg);
    return j;
}

} // namespace

RunArtifacts run(const RunConfig& cfg, const StepObserver& observer) {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir = cfg.output_dir;
    RunArtifacts art;
    Simulation sim(cfg);
    const auto& m = sim.material();
    spdlog::info("mesh {} cells, {} dofs; h_f = {:.6g}, epsilon = {:.6g}, density = {:.6g}, viscosity = {:.6g}",
                 sim.mesh().num_triangles(), sim.mesh().num_vertices(), cfg.h_f(), m.epsilon, m.density,
                 m.viscosity);
    const int report_every = std::max(1, cfg.steps / 20);
    try {
        while (!sim.finished()) {
            const StepRecord& rec = sim.advance();
            if (observer) observer(sim, rec);
            if (cfg.snapshot_every > 0 && rec.step % cfg.snapshot_every == 0) {
                art.snapshots.push_back(write_snapshot(sim.snapshot(), dir));
            }
            if (rec.step % report_every == 0 || rec.step == cfg.steps) {
                spdlog::info("step {}/{} t={:.4f} cells={} dofs={} R_h={:.3e} E=({:.4e}, {:.4e}, {:.4e}) pinned={}",
                             rec.step, cfg.steps, rec.time, rec.energy.ncells, rec.energy.ndofs,
                             rec.energy.estimator, rec.energy.kinetic, rec.energy.strain, rec.energy.surface,
                             sim.state().crack.count());
            }
        }
    } catch (...) {
        if (!sim.trace().empty()) {
            try {
                write_energy_trace(sim.trace(), dir / "energy.csv");
            } catch (const std::exception& e) {
                spdlog::error("could not write partial energy trace: {}", e.what());
            }
        }
        throw;
    }
    if (cfg.write_final_snapshot && (cfg.snapshot_every == 0 || cfg.steps % cfg.snapshot_every != 0)) {
        art.snapshots.push_back(write_snapshot(sim.snapshot(), dir));
    }
    art.energy_csv = write_energy_trace(sim.trace(), dir / "energy.csv");
    art.summary = sim.summary();
    art.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    art.summary_json = dir / "summary.json";
    write_text_file(art.summary_json, summary_json(cfg, sim, art.summary).dump(2) + "\n");
    return art;
}

} // namespace afem
