// illg: command-line front end.
//   illg run <config>
//   illg sweep-table1 --levels 5,6,7 --deltas 0.1,0.2,0.3,0.4
//   illg gen-mesh --level L --out PATH
//   illg check-mesh PATH
// Exit status: 0 ok, 1 configuration or I/O error, 2 fixed-point non-convergence.

#include "illg/illg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNonConvergence = 2;

int cmd_run(const std::string& path, bool quiet)
{
    const illg::RunConfig config = illg::load_config(path);
    const illg::RunSummary s = illg::run(config, &std::cerr);
    if (!quiet) {
        const auto& last = s.rows.back();
        std::printf("%s: %zu steps to t = %.6g, mean iterations %.3f\n", illg::to_string(config.scheme), s.steps,
                    s.final_time, s.mean_iterations);
        std::printf("final <m> = (%.6f, %.6f, %.6f), J_h = %.9g, W1inf = %.6g\n", last.m1, last.m2, last.m3,
                    last.tot, last.w1infty);
    }
    return kExitOk;
}

int cmd_sweep(const std::vector<int>& levels, const std::vector<double>& deltas, const illg::Table1Options& opt,
              const std::string& out_path)
{
    std::ofstream out;
    if (!out_path.empty()) {
        out.open(out_path);
        if (!out) {
            throw illg::IoError("cannot open " + out_path + " for writing");
        }
        out << "level,delta,converged,mean_iterations,steps\n";
    }
    std::printf("%-6s", "level");
    for (double d : deltas) {
        std::printf("  delta=%-6.3g", d);
    }
    std::printf("\n");
    for (int level : levels) {
        std::printf("%-6d", level);
        std::fflush(stdout);
        for (double d : deltas) {
            const illg::Table1Cell c = illg::table1_cell(level, d, opt);
            if (c.converged) {
                std::printf("  %-12.2f", c.mean_iterations);
            } else {
                std::printf("  %-12s", ("n/c@" + std::to_string(c.failed_step)).c_str());
            }
            std::fflush(stdout);
            if (out.is_open()) {
                out << level << ',' << illg::format_double(d) << ',' << (c.converged ? 1 : 0) << ','
                    << illg::format_double(c.mean_iterations) << ',' << c.steps << '\n';
            }
        }
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_gen_mesh(int level, const std::string& diagonal, const std::vector<double>& ellipse, int rings,
                 const std::string& out)
{
    const illg::Mesh mesh = ellipse.empty()
                                ? illg::generate_uniform_square(level, illg::parse_diagonal(diagonal))
                                : illg::generate_ellipse(ellipse[0], ellipse[1], rings);
    illg::save_mesh(out, mesh);
    std::printf("%zu vertices, %zu triangles, h = %.6g, h_min = %.6g\n", mesh.num_vertices(), mesh.num_triangles(),
                mesh.h(), mesh.h_min());
    return kExitOk;
}

int cmd_check_mesh(const std::string& path)
{
    const illg::FemContext ctx(illg::load_mesh(path));
    const auto report = illg::check_angle_condition(ctx.mesh, ctx.stiffness);
    std::printf("vertices   %zu\n", ctx.mesh.num_vertices());
    std::printf("triangles  %zu\n", ctx.mesh.num_triangles());
    std::printf("area       %.12g\n", ctx.mesh.total_area());
    std::printf("h          %.6g\n", ctx.mesh.h());
    std::printf("h_min      %.6g\n", ctx.mesh.h_min());
    std::printf("C_inv      %.6g\n", illg::estimate_inverse_constant(ctx));
    if (report.satisfied()) {
        std::printf("angle condition satisfied (largest off-diagonal %.3g)\n", report.worst_off_diagonal);
    } else {
        std::printf("angle condition violated: %zu positive off-diagonal entries, worst %.6g\n", report.violations,
                    report.worst_off_diagonal);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"inertial LLG finite-element toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a simulation described by a config file");
    std::string config_path;
    bool quiet = false;
    run->add_option("config", config_path, "key = value configuration file")->required();
    run->add_flag("-q,--quiet", quiet, "no summary on stdout");

    auto* sweep = app.add_subcommand("sweep-table1", "mean fixed-point iterations of the blow-up problem");
    std::vector<int> levels{5, 6, 7};
    std::vector<double> deltas{0.1, 0.2, 0.3, 0.4};
    illg::Table1Options opt;
    std::string sweep_diagonal = "alternating";
    std::string sweep_measure = "squared-sum";
    std::string sweep_out;
    sweep->add_option("--levels", levels, "mesh levels")->delimiter(',')->capture_default_str();
    sweep->add_option("--deltas", deltas, "k / h ratios")->delimiter(',')->capture_default_str();
    sweep->add_option("--epsilon", opt.epsilon, "stopping tolerance")->capture_default_str();
    sweep->add_option("--max-iterations", opt.max_iterations, "fixed-point budget")->capture_default_str();
    sweep->add_option("--t-final", opt.t_final, "final time")->capture_default_str();
    sweep->add_option("--diagonal", sweep_diagonal, "fixed | alternating")->capture_default_str();
    sweep->add_option("--measure", sweep_measure, "norm-sum | squared-sum")->capture_default_str();
    sweep->add_option("--out", sweep_out, "also write the cells as CSV");

    auto* gen = app.add_subcommand("gen-mesh", "write a generated mesh");
    int level = 5;
    std::string gen_diagonal = "fixed";
    std::vector<double> ellipse;
    int rings = 32;
    std::string gen_out;
    gen->add_option("--level", level, "unit-square refinement level")->capture_default_str();
    gen->add_option("--diagonal", gen_diagonal, "fixed | alternating")->capture_default_str();
    gen->add_option("--ellipse", ellipse, "semi-axes A B: ellipse instead of the square")->expected(2);
    gen->add_option("--rings", rings, "ellipse rings")->capture_default_str();
    gen->add_option("--out", gen_out, "output path")->required();

    auto* check = app.add_subcommand("check-mesh", "load a mesh and report its metrics");
    std::string check_path;
    check->add_option("path", check_path, "mesh file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*run) {
            return cmd_run(config_path, quiet);
        }
        if (*sweep) {
            opt.diagonal = illg::parse_diagonal(sweep_diagonal);
            opt.measure = illg::parse_measure(sweep_measure);
            return cmd_sweep(levels, deltas, opt, sweep_out);
        }
        if (*gen) {
            return cmd_gen_mesh(level, gen_diagonal, ellipse, rings, gen_out);
        }
        if (*check) {
            return cmd_check_mesh(check_path);
        }
    } catch (const illg::NonConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
