#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afem/estimator.hpp"
#include "afem/material.hpp"
#include "afem/mesh.hpp"
#include "afem/phasefield.hpp"

namespace afem {

enum class MarkingStrategy { Fraction, Dorfler };

struct RunConfig {
    // [mesh]
    double domain_size = 3.0;   // square [0, L]^2
    int n0 = 64;
    int max_levels = 4;         // halvings of the initial mesh size (two bisections each)
    bool slit = true;
    double slit_x_begin = 0.0;
    double slit_x_end = 1.5;
    double slit_y = 1.5;

    // [material]; unset values derive from h_f
    double mu = 1.0;
    double kappa = 1e-10;
    double lambda_c = 1.0;
    double c_w = 8.0 / 3.0;
    std::optional<double> epsilon;
    std::optional<double> density;
    std::optional<double> viscosity;

    // [loading]
    double eps_v = 0.9;
    double t_s = 0.5;
    std::optional<double> t_g;  // defaults to t_final

    // [time]
    int steps = 1600;
    double t_final = 5.0;

    // [tolerances]
    double xi_v = 1e-2;
    double xi_cr = 1e-2;
    double xi_vn = 1e-10;
    double xi_rf = 1e-3;
    double solver_tol = 1e-12;
    int solver_max_iter = 10000;
    int max_inner_iters = 50;

    // [marking]
    MarkingStrategy strategy = MarkingStrategy::Fraction;
    double theta = 0.5;
    double refine_fraction = 0.2;
    double coarsen_fraction = 0.05;
    double cell_threshold = 1e-3;  // cells at or below this R_tau are never refined
    bool adapt = true;

    // [solver]
    PhaseFieldMode phasefield_mode = PhaseFieldMode::UpperObstacle;
    JumpKind estimator_jump = JumpKind::GradientMagnitude;
    bool skip_constrained = true;
    std::uint64_t seed = 0;

    // [output]
    std::string output_dir = "output";
    int snapshot_every = 100;   // 0 disables snapshots
    bool write_final_snapshot = true;

    /// Finest mesh size L / (n0 2^max_levels).
    double h_f() const;
    double time_step() const { return t_final / steps; }
    Rectangle domain() const { return {0.0, 0.0, domain_size, domain_size}; }
    std::optional<Slit> slit_geometry() const;
    MaterialParams material() const;
    LoadingParams loading() const;

    /// Throws ConfigError on any inconsistent value.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses the sectioned key = value format; omitted keys keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every set key, doubles printed with 17 significant digits.
std::string write_config(const RunConfig& cfg);

struct DefaultNote {
    std::string key;
    std::string value;
    std::string origin;  // "experiment" or "assumption"
};

/// Keys the text did not set, with the value used and where it comes from.
std::vector<DefaultNote> defaults_used(std::string_view text);

} // namespace afem
