#include "afem/output.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

#include <fmt/format.h>

#include "afem/error.hpp"

namespace afem {

FeFunction stress_proxy(const P1Space& space, const FeFunction& u, const FeFunction& v, double kappa) {
    require_generation(space.tag(), u.tag, "displacement");
    require_generation(space.tag(), v.tag, "phase field");
    const Mesh& mesh = space.mesh();
    const auto g = space.gradients(u.values);
    FeFunction out(mesh);
    std::vector<double> weight(mesh.num_vertices(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double a = (1.0 - kappa) * mean_square(v[tri[0]], v[tri[1]], v[tri[2]]) + kappa;
        const double w = space.area(t);
        for (int i : tri) {
            out.values[i] += w * a * dot(g[t], g[t]);
            weight[i] += w;
        }
    }
    for (int i = 0; i < mesh.num_vertices(); ++i)
        if (weight[i] > 0.0) out.values[i] /= weight[i];
    return out;
}

namespace {

void scalars(std::string& out, const char* name, std::span<const double> values) {
    out += fmt::format("SCALARS {} double 1\nLOOKUP_TABLE default\n", name);
    for (double x : values) out += fmt::format("{:.9e}\n", x);
}

} // namespace

std::string format_snapshot(const Snapshot& s) {
    if (!s.mesh) throw std::invalid_argument("snapshot without a mesh");
    const Mesh& mesh = *s.mesh;
    for (const FeFunction* f : {&s.u, &s.du, &s.v, &s.stress_proxy}) {
        require_generation(mesh.tag(), f->tag, "snapshot field");
    }
    if (s.estimator.size() != static_cast<std::size_t>(mesh.num_triangles())) {
        throw std::invalid_argument("snapshot estimator size does not match the mesh");
    }
    const int nv = mesh.num_vertices();
    const int nt = mesh.num_triangles();
    std::string out;
    out += "# vtk DataFile Version 3.0\n";
    out += fmt::format("fracture-afem step {} time {:.9e}\n", s.step, s.time);
    out += "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out += fmt::format("POINTS {} double\n", nv);
    for (const Point& p : mesh.vertices()) out += fmt::format("{:.9e} {:.9e} {:.9e}\n", p.x, p.y, 0.0);
    out += fmt::format("CELLS {} {}\n", nt, 4 * nt);
    for (const auto& tri : mesh.triangles()) out += fmt::format("3 {} {} {}\n", tri[0], tri[1], tri[2]);
    out += fmt::format("CELL_TYPES {}\n", nt);
    for (int t = 0; t < nt; ++t) out += "5\n";
    out += fmt::format("POINT_DATA {}\n", nv);
    scalars(out, "u", s.u.values);
    scalars(out, "du", s.du.values);
    scalars(out, "v", s.v.values);
    scalars(out, "stress_proxy", s.stress_proxy.values);
    out += fmt::format("CELL_DATA {}\n", nt);
    scalars(out, "estimator", s.estimator);
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

std::filesystem::path write_snapshot(const Snapshot& s, const std::filesystem::path& dir) {
    const auto path = dir / fmt::format("snapshot_{:06d}.vtk", s.step);
    write_text_file(path, format_snapshot(s));
    return path;
}

std::string format_energy_trace(std::span<const EnergyReport> reports) {
    if (reports.empty()) throw std::invalid_argument("energy trace is empty");
    std::string out = "step,time,kinetic,strain,surface,total,estimator,est_min,est_max,ndofs,ncells\n";
    int last = -1;
    for (const auto& r : reports) {
        if (r.step <= last) throw std::invalid_argument("energy trace steps must increase");
        last = r.step;
        out += fmt::format("{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}\n", r.step, r.time,
                           r.kinetic, r.strain, r.surface, r.total, r.estimator, r.est_min, r.est_max, r.ndofs,
                           r.ncells);
    }
    return out;
}

std::filesystem::path write_energy_trace(std::span<const EnergyReport> reports, const std::filesystem::path& path) {
    write_text_file(path, format_energy_trace(reports));
    return path;
}

} // namespace afem
