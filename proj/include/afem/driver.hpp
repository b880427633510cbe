#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "afem/config.hpp"
#include "afem/dynamics.hpp"
#include "afem/estimator.hpp"
#include "afem/output.hpp"

namespace afem {

/// What happened during one time step.
struct StepRecord {
    int step = 0;
    double time = 0.0;
    int inner_iters = 0;          // of the accepted staggered solve
    bool inner_converged = true;
    bool adapted = false;
    AdaptSummary adapt{};
    int refine_marked = 0;
    int coarsen_marked = 0;
    double max_stationarity = 0.0;  // over every phase-field solve of the step
    bool active_set_converged = true;
    double boundary_work = 0.0;
    /// E_n - E_{n-1} - W_n; the scheme keeps this <= 0 up to roundoff.
    double ledger_excess = 0.0;
    int newly_pinned = 0;
    EnergyReport energy{};
};

struct RunSummary {
    int steps = 0;
    int final_cells = 0;
    int final_dofs = 0;
    int max_cells = 0;
    int adapt_events = 0;
    double wall_seconds = 0.0;
    int inner_not_converged = 0;
    int active_set_not_converged = 0;
    double max_stationarity = 0.0;
    int ledger_violations = 0;     // ledger_excess above 1e-8 of the energy scale
    double max_ledger_excess = 0.0;
    int first_damage_step = -1;    // first step with a pinned dof
    int surface_decreases = 0;     // steps where the surface energy dropped
    int first_surface_decrease = -1;
    std::vector<Point> first_pinned;
    std::vector<std::string> warnings;
    int warning_count = 0;
};

/// Energies of a state on its mesh.
EnergyReport energies(const P1Space& space, const DynamicState& state, const MaterialParams& params);

/// Time loop of the adaptive staggered scheme.
class Simulation {
public:
    explicit Simulation(RunConfig cfg);
    /// Starts from a given mesh and state (tests).
    Simulation(RunConfig cfg, Mesh mesh, DynamicState state);

    const RunConfig& config() const { return cfg_; }
    const MaterialParams& material() const { return mat_; }
    const Mesh& mesh() const { return *mesh_; }
    const P1Space& space() const { return *space_; }
    const DynamicState& state() const { return state_; }
    const EstimatorField& estimator() const { return est_; }
    const std::vector<EnergyReport>& trace() const { return trace_; }
    const RunSummary& summary() const { return summary_; }
    int steps_done() const { return static_cast<int>(trace_.size()); }
    bool finished() const { return steps_done() >= cfg_.steps; }
    double time_step() const { return cfg_.time_step(); }

    /// Advances one time step (step 1 only solves for v).
    const StepRecord& advance();

    /// Staggered u/v iteration at time t starting from `from`; does not
    /// touch the simulation state.
    DynamicState staggered_step(const DynamicState& from, double t, StepRecord& rec) const;

    EnergyReport energy_report() const;
    Snapshot snapshot() const;

private:
    void set_mesh(Mesh mesh);
    void warn(std::string msg);

    RunConfig cfg_;
    MaterialParams mat_;
    LoadingParams load_;
    std::unique_ptr<Mesh> mesh_;
    std::unique_ptr<P1Space> space_;
    DynamicState state_;
    EstimatorField est_;
    std::vector<EnergyReport> trace_;
    StepRecord last_;
    RunSummary summary_;
};

struct RunArtifacts {
    std::filesystem::path energy_csv;
    std::filesystem::path summary_json;
    std::vector<std::filesystem::path> snapshots;
    RunSummary summary;
};

using StepObserver = std::function<void(const Simulation&, const StepRecord&)>;

/// Runs every step, writes energy.csv, snapshots and summary.json under
/// cfg.output_dir. Throws RunError naming the step and phase on failure.
RunArtifacts run(const RunConfig& cfg, const StepObserver& observer = {});

} // namespace afem
