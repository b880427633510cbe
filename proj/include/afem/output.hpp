#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afem/fem.hpp"
#include "afem/material.hpp"

namespace afem {

struct EnergyReport {
    int step = 0;
    double time = 0.0;
    double kinetic = 0.0;   // rho/2 ||du||^2
    double strain = 0.0;    // mu/2 int a |grad u|^2
    double surface = 0.0;   // lambda_c / c_w H(v)
    double total = 0.0;
    double estimator = 0.0; // R_h
    double est_min = 0.0;   // min R_tau
    double est_max = 0.0;   // max R_tau
    int ndofs = 0;
    int ncells = 0;
};

struct Snapshot {
    int step = 0;
    double time = 0.0;
    const Mesh* mesh = nullptr;
    FeFunction u;
    FeFunction du;
    FeFunction v;
    FeFunction stress_proxy;
    std::vector<double> estimator;  // R_tau^2 per triangle
};

/// ((1 - kappa) v^2 + kappa) |grad u|^2 per element, averaged to the
/// vertices with area weights.
FeFunction stress_proxy(const P1Space& space, const FeFunction& u, const FeFunction& v, double kappa);

/// Legacy ASCII unstructured-grid text of a snapshot.
std::string format_snapshot(const Snapshot& s);

/// Writes dir/snapshot_<step>.vtk and returns its path.
std::filesystem::path write_snapshot(const Snapshot& s, const std::filesystem::path& dir);

std::string format_energy_trace(std::span<const EnergyReport> reports);
std::filesystem::path write_energy_trace(std::span<const EnergyReport> reports, const std::filesystem::path& path);

/// Writes text to path, creating parent directories; throws Error naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace afem
