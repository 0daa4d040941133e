#include "illg/driver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace illg;

namespace {

std::string tmp_path(const std::string& name)
{
    return std::string(ILLG_TEST_TMPDIR) + "/" + name;
}

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

RunConfig small_blowup(Scheme scheme, int level = 3)
{
    RunConfig c;
    c.scheme = scheme;
    c.level = level;
    c.t_final = 0.2;
    return c;
}

} // namespace

TEST(BlowupDatum, Examples)
{
    const Mesh mesh(
        {Point2(0, 0), Point2(0.25, 0), Point2(0.5, 0), Point2(0, 0.5), Point2(0.5, 0.5)},
        {Triangle{0, 1, 3}, Triangle{1, 2, 4}, Triangle{1, 4, 3}});
    const auto d = blowup_initial_data(mesh);
    EXPECT_EQ(d.m0[0], Vec3::UnitZ());
    // r = 1/4, a = 1/16: (2a x, 0, a^2 - r^2) / (a^2 + r^2)
    const double a = 1.0 / 16, r = 0.25;
    EXPECT_LE((d.m0[1] - Vec3(2 * a * r, 0, a * a - r * r) / (a * a + r * r)).norm(), 1e-15);
    EXPECT_LE((d.m0[2] - Vec3(0, 0, -1)).norm(), 1e-15);
    EXPECT_LE((d.m0[4] - Vec3(0, 0, -1)).norm(), 1e-15);
    EXPECT_EQ(d.v0.matrix().cwiseAbs().maxCoeff(), 0.0);
}

TEST(BlowupDatum, UnitLengthOnTheSquare)
{
    const auto d = blowup_initial_data(generate_uniform_square(5));
    EXPECT_LE(unit_length_defect(d.m0), 1e-14);
}

TEST(Problem, BlowupDefaults)
{
    RunConfig c;
    c.level = 4;
    const Problem p = build_problem(c);
    const double h = p.ctx->mesh.h();
    EXPECT_DOUBLE_EQ(p.k, h / 10);
    EXPECT_DOUBLE_EQ(p.epsilon, h / 10);
    EXPECT_DOUBLE_EQ(p.t_final, 2.0);
    EXPECT_EQ(p.ctx->num_vertices(), 289u);
}

TEST(Problem, NutationPreset)
{
    RunConfig c;
    c.preset = Preset::nutation;
    c.ellipse_rings = 8;
    const Problem p = build_problem(c);
    EXPECT_NEAR(p.t_final, 5.306, 1e-3);
    EXPECT_NEAR(p.k * p.time_unit, 10e-15, 1e-27);
    EXPECT_DOUBLE_EQ(p.epsilon, 1e-6);
    EXPECT_NEAR(p.alpha, 0.023, 0.0);
    const Vec3 avg = average(p.ctx->mass, p.initial.m0);
    EXPECT_NEAR(avg.x(), 1.0, 1e-14);
    EXPECT_EQ(avg.z(), 0.0);
    EXPECT_TRUE(static_cast<bool>(p.model.applied_field));
    // semiaxes rescaled by the exchange length
    double xmax = 0.0;
    for (std::size_t z = 0; z < p.ctx->num_vertices(); ++z) {
        xmax = std::max(xmax, p.ctx->mesh.vertex(z).x());
    }
    EXPECT_NEAR(xmax, 100e-9 / rescale(PhysicalParams{}).length_unit, 1e-9);
}

TEST(Config, ParsesKeysAndComments)
{
    const RunConfig c = parse("# comment\n"
                              "scheme = tps   # trailing\n"
                              "level = 4\n"
                              "\n"
                              "k_over_h = 0.05\n"
                              "increment_measure = squared-sum\n"
                              "diagonal = alternating\n"
                              "strict = true\n");
    EXPECT_EQ(c.scheme, Scheme::tps);
    EXPECT_EQ(c.level, 4);
    EXPECT_DOUBLE_EQ(*c.k_over_h, 0.05);
    EXPECT_EQ(c.measure, IncrementMeasure::squared_sum);
    EXPECT_EQ(c.diagonal, DiagonalPattern::alternating);
    EXPECT_TRUE(c.strict);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    const auto message = [](const std::string& text) {
        try {
            parse(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("level = 3\nbogus = 1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("level = 3\n\nlevel = 4\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("level = 3\n\nlevel = 4\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("scheme = euler\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("k = abc\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("just words\n").find("line 1"), std::string::npos);
    EXPECT_THROW(parse("k = 0.1\nk_over_h = 0.1\n"), ConfigError);
    EXPECT_THROW(parse("k = -1\n"), ConfigError);
    EXPECT_THROW(parse("cadence = 0\n"), ConfigError);
    EXPECT_THROW(load_config(tmp_path("does_not_exist.cfg")), ConfigError);
}

TEST(Output, CsvRoundTripIsExact)
{
    std::vector<ObservableRow> rows;
    rows.push_back({0.0, 1.0, 0.0, -0.0, 0.1, 0.0, 0.1, 2.0, 0});
    rows.push_back({0.1 + 0.2, 1.0 / 3.0, -2e-300, std::nextafter(1.0, 2.0), 1e300, 5e-324, 3.14159, 64.0, 17});
    std::ostringstream out;
    write_csv(out, rows);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kCsvHeader);
    std::istringstream in(out.str());
    const auto back = read_csv(in);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].t, rows[i].t);
        EXPECT_EQ(back[i].m1, rows[i].m1);
        EXPECT_EQ(back[i].m2, rows[i].m2);
        EXPECT_EQ(back[i].m3, rows[i].m3);
        EXPECT_EQ(back[i].exchange, rows[i].exchange);
        EXPECT_EQ(back[i].kinetic, rows[i].kinetic);
        EXPECT_EQ(back[i].tot, rows[i].tot);
        EXPECT_EQ(back[i].w1infty, rows[i].w1infty);
        EXPECT_EQ(back[i].iters, rows[i].iters);
    }
}

TEST(Output, HeaderOnlyCsvAndMalformedRows)
{
    std::istringstream empty(std::string(kCsvHeader) + "\n");
    EXPECT_TRUE(read_csv(empty).empty());
    std::istringstream bad(std::string(kCsvHeader) + "\n1,2,3\n");
    EXPECT_THROW(read_csv(bad), IoError);
    std::istringstream wrong_header("a,b\n");
    EXPECT_THROW(read_csv(wrong_header), IoError);
}

TEST(Output, VtkOfASingleTriangle)
{
    const Mesh mesh({Point2(0, 0), Point2(1, 0), Point2(0, 1)}, {Triangle{0, 1, 2}});
    const auto m = NodalVectorField::constant(3, Vec3::UnitZ());
    std::ostringstream out;
    write_vtk(out, mesh, m);
    const std::string s = out.str();
    EXPECT_NE(s.find("# vtk DataFile Version"), std::string::npos);
    EXPECT_NE(s.find("POINTS 3 double"), std::string::npos);
    EXPECT_NE(s.find("CELLS 1 4"), std::string::npos);
    EXPECT_NE(s.find("CELL_TYPES 1"), std::string::npos);
    EXPECT_NE(s.find("POINT_DATA 3"), std::string::npos);
    EXPECT_NE(s.find("VECTORS m double"), std::string::npos);
    std::istringstream in(s.substr(s.find("VECTORS m double")));
    std::string line;
    std::getline(in, line);
    int vectors = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            std::istringstream v(line);
            double a, b, c;
            ASSERT_TRUE(v >> a >> b >> c);
            EXPECT_EQ(Vec3(a, b, c), Vec3::UnitZ());
            ++vectors;
        }
    }
    EXPECT_EQ(vectors, 3);
}

TEST(Output, RowsWithNonFiniteValuesAreFlagged)
{
    ObservableRow r;
    EXPECT_TRUE(r.all_finite());
    r.tot = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(r.all_finite());
}

TEST(Driver, ShortRunEmitsOnlyTheInitialRow)
{
    RunConfig c = small_blowup(Scheme::amm);
    c.t_final = 0.5 * generate_uniform_square(c.level).h() / 10;
    Simulation sim = Simulation::from_config(c);
    EXPECT_EQ(sim.total_steps(), 0u);
    const RunSummary s = drive(sim, 1);
    ASSERT_EQ(s.rows.size(), 1u);
    EXPECT_EQ(s.rows[0].t, 0.0);
    EXPECT_EQ(s.rows[0].iters, 0);
    EXPECT_THROW(iteration_statistics(s.rows), std::invalid_argument);
}

TEST(Driver, CadenceAndFinalRow)
{
    RunConfig c = small_blowup(Scheme::amm);
    Simulation sim = Simulation::from_config(c);
    const std::size_t n = sim.total_steps();
    ASSERT_GT(n, 5u);
    const RunSummary s = drive(sim, 4);
    EXPECT_EQ(s.steps, n);
    EXPECT_EQ(s.rows.size(), 1 + n / 4 + (n % 4 != 0 ? 1 : 0));
    EXPECT_NEAR(s.rows.back().t, n * sim.problem().k, 1e-12);
    for (std::size_t i = 1; i < s.rows.size(); ++i) {
        EXPECT_GE(s.rows[i].iters, 1);
    }
}

TEST(Driver, IterationStatistics)
{
    std::vector<ObservableRow> rows(4);
    rows[1].iters = 3;
    rows[2].iters = 5;
    rows[3].iters = 7;
    EXPECT_DOUBLE_EQ(iteration_statistics(rows), 5.0);
    EXPECT_THROW(iteration_statistics({}), std::invalid_argument);
}

TEST(Driver, DeterministicRows)
{
    for (Scheme scheme : {Scheme::amm, Scheme::tps, Scheme::llg_tps}) {
        Simulation a = Simulation::from_config(small_blowup(scheme));
        Simulation b = Simulation::from_config(small_blowup(scheme));
        const auto ra = drive(a, 1).rows;
        const auto rb = drive(b, 1).rows;
        ASSERT_EQ(ra.size(), rb.size());
        for (std::size_t i = 0; i < ra.size(); ++i) {
            EXPECT_EQ(ra[i].tot, rb[i].tot);
            EXPECT_EQ(ra[i].m3, rb[i].m3);
            EXPECT_EQ(ra[i].w1infty, rb[i].w1infty);
        }
    }
}

TEST(Driver, TangentPlaneEnergyIsNonIncreasing)
{
    for (Scheme scheme : {Scheme::tps, Scheme::llg_tps}) {
        RunConfig c = small_blowup(scheme, 4);
        c.strict = true;
        Simulation sim = Simulation::from_config(c);
        EXPECT_TRUE(sim.energy_law_enforced());
        const auto rows = drive(sim, 1).rows;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            EXPECT_LE(rows[i].tot, rows[i - 1].tot + 1e-12) << "row " << i;
        }
    }
}

TEST(Driver, StrictAngularMomentumRun)
{
    RunConfig c = small_blowup(Scheme::amm, 4);
    c.strict = true;
    c.epsilon = 1e-10;
    Simulation sim = Simulation::from_config(c);
    EXPECT_TRUE(sim.energy_law_enforced());
    EXPECT_NO_THROW(drive(sim, 10));
    EXPECT_LE(sim.diagnostics().unit_length, 1e-12);
}

TEST(Driver, NonConvergencePropagates)
{
    RunConfig c = small_blowup(Scheme::amm, 4);
    c.k_over_h = 0.8;
    Simulation sim = Simulation::from_config(c);
    EXPECT_FALSE(sim.advisories().empty());
    EXPECT_THROW(drive(sim, 1), NonConvergence);
}

TEST(Driver, RunWritesCsvAndSnapshots)
{
    namespace fs = std::filesystem;
    const std::string dir = tmp_path("run_out");
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig c = small_blowup(Scheme::amm);
    c.csv = dir + "/blowup.csv";
    c.cadence = 2;
    c.snapshot_cadence = 5;
    const RunSummary s = run(c);
    const auto rows = read_csv(c.csv);
    ASSERT_EQ(rows.size(), s.rows.size());
    EXPECT_EQ(rows.back().tot, s.rows.back().tot);
    EXPECT_TRUE(fs::exists(dir + "/blowup_0.vtk"));
    EXPECT_TRUE(fs::exists(dir + "/blowup_5.vtk"));
    EXPECT_TRUE(fs::exists(dir + "/blowup_final.vtk"));
}

TEST(Driver, UnwritableCsvIsAnIoError)
{
    RunConfig c = small_blowup(Scheme::amm);
    c.csv = tmp_path("no_such_dir/x/out.csv");
    EXPECT_THROW(run(c), IoError);
}

TEST(Driver, MeshFileInput)
{
    const std::string path = tmp_path("level3.mesh");
    save_mesh(path, generate_uniform_square(3));
    RunConfig c = small_blowup(Scheme::tps);
    c.mesh_file = path;
    const Problem p = build_problem(c);
    EXPECT_EQ(p.ctx->num_vertices(), 81u);
}

TEST(Table1, CellAtSmallDelta)
{
    Table1Options opt;
    opt.t_final = 0.1;
    const Table1Cell cell = table1_cell(3, 0.1, opt);
    EXPECT_TRUE(cell.converged);
    EXPECT_GT(cell.mean_iterations, 2.0);
    EXPECT_EQ(cell.steps, static_cast<std::size_t>(std::floor(0.1 / (0.1 * generate_uniform_square(3).h()) + 1e-9)));
}

TEST(Config, SampleConfigsParse)
{
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(ILLG_CONFIG_DIR)) {
        if (entry.path().extension() == ".cfg") {
            EXPECT_NO_THROW(build_problem(load_config(entry.path().string()))) << entry.path();
            ++count;
        }
    }
    EXPECT_GE(count, 5);
}
