#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "afem/error.hpp"
#include "afem/output.hpp"

using namespace afem;

namespace {

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Snapshot zero_snapshot(const Mesh& m) {
    Snapshot s;
    s.mesh = &m;
    s.u = FeFunction(m);
    s.du = FeFunction(m);
    s.v = FeFunction(m);
    s.stress_proxy = FeFunction(m);
    s.estimator.assign(m.num_triangles(), 0.0);
    return s;
}

std::filesystem::path scratch(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("two-triangle zero snapshot matches the golden file") {
    const Mesh m = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 1);
    const std::string text = format_snapshot(zero_snapshot(m));
    CHECK(text == read(std::filesystem::path(AFEM_GOLDEN_DIR) / "two_triangles_zero.vtk"));
}

TEST_CASE("snapshot structure follows the mesh") {
    const Mesh m = build_initial_mesh({0, 0, 3, 3}, Slit{0, 1.5, 1.5}, 4);
    Snapshot s = zero_snapshot(m);
    s.step = 12;
    s.time = 0.375;
    const std::string text = format_snapshot(s);
    CHECK(text.find(fmt::format("POINTS {} double", m.num_vertices())) != std::string::npos);
    CHECK(text.find(fmt::format("CELLS {} {}", m.num_triangles(), 4 * m.num_triangles())) != std::string::npos);
    CHECK(text.find(fmt::format("POINT_DATA {}", m.num_vertices())) != std::string::npos);
    CHECK(text.find(fmt::format("CELL_DATA {}", m.num_triangles())) != std::string::npos);
    for (const char* name : {"u", "du", "v", "stress_proxy", "estimator"})
        CHECK(text.find(fmt::format("SCALARS {} double 1", name)) != std::string::npos);
    CHECK(text.find("step 12 time 3.750000000e-01") != std::string::npos);

    const auto dir = scratch("afem_test_output");
    const auto p1 = write_snapshot(s, dir);
    CHECK(p1.filename() == "snapshot_000012.vtk");
    const std::string first = read(p1);
    write_snapshot(s, dir);
    CHECK(read(p1) == first);
    CHECK(first == text);
    std::filesystem::remove_all(dir);
}

TEST_CASE("snapshot fields must belong to the mesh") {
    const Mesh m = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 2);
    const Mesh other = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 2);
    Snapshot s = zero_snapshot(m);
    s.v = FeFunction(other);
    CHECK_THROWS_AS(format_snapshot(s), GenerationMismatch);
    s = zero_snapshot(m);
    s.estimator.pop_back();
    CHECK_THROWS_AS(format_snapshot(s), std::invalid_argument);
}

TEST_CASE("stress proxy of a uniform gradient") {
    const Mesh m = build_initial_mesh({0, 0, 1, 1}, std::nullopt, 3);
    const P1Space space(m);
    const auto u = FeFunction::interpolate(m, [](Point p) { return 3.0 * p.x + 4.0 * p.y; });
    const auto sp = stress_proxy(space, u, FeFunction(m, 1.0), 1e-10);
    for (double x : sp.values) CHECK(x == doctest::Approx(25.0));
    const auto sp0 = stress_proxy(space, u, FeFunction(m, 0.0), 0.5);
    for (double x : sp0.values) CHECK(x == doctest::Approx(12.5));
}

TEST_CASE("energy trace CSV") {
    EnergyReport r;
    const std::string one = format_energy_trace(std::span<const EnergyReport>(&r, 1));
    CHECK(one ==
          "step,time,kinetic,strain,surface,total,estimator,est_min,est_max,ndofs,ncells\n"
          "0,0.000000000e+00,0.000000000e+00,0.000000000e+00,0.000000000e+00,0.000000000e+00,"
          "0.000000000e+00,0.000000000e+00,0.000000000e+00,0,0\n");
    std::vector<EnergyReport> rows(3);
    rows[0].step = 1;
    rows[1].step = 2;
    rows[2].step = 2;
    CHECK_THROWS_AS(format_energy_trace(rows), std::invalid_argument);
    CHECK_THROWS_AS(format_energy_trace({}), std::invalid_argument);
    rows[2].step = 5;
    rows[2].kinetic = 1.5;
    rows[2].ndofs = 7;
    const auto dir = scratch("afem_test_csv");
    const auto path = write_energy_trace(rows, dir / "nested" / "energy.csv");
    const std::string text = read(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.find("5,0.000000000e+00,1.500000000e+00,") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("write errors name the path") {
    const auto dir = scratch("afem_test_blocked");
    std::filesystem::create_directories(dir);
    const auto blocker = dir / "file";
    std::ofstream(blocker) << "x";
    try {
        write_text_file(blocker / "sub" / "out.txt", "data");
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("file") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
