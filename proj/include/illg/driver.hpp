#pragma once

// Experiment presets, the time loop shared by both integrators, observables
// and the iteration-count sweep over the blow-up problem.

#include "illg/amm.hpp"
#include "illg/config.hpp"
#include "illg/fem.hpp"
#include "illg/field.hpp"
#include "illg/mesh.hpp"
#include "illg/output.hpp"
#include "illg/tps.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace illg {

/// Strict mode detected a broken invariant.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InitialData {
    NodalVectorField m0;
    NodalVectorField v0;
};

/// m0 = (2a x1, 2a x2, a^2 - |x|^2) / (a^2 + |x|^2), a = max(0, 1 - 2|x|)^4, v0 = 0.
inline InitialData blowup_initial_data(const Mesh& mesh)
{
    const std::size_t n = mesh.num_vertices();
    InitialData out{NodalVectorField(n), NodalVectorField(n)};
    for (std::size_t z = 0; z < n; ++z) {
        const Point2& x = mesh.vertex(z);
        const double r = x.norm();
        const double a = r < 0.5 ? std::pow(1.0 - 2.0 * r, 4) : 0.0;
        const double d = a * a + r * r;
        if (d == 0.0) {
            throw FieldError("blow-up datum undefined at vertex " + std::to_string(z));
        }
        out.m0.set(z, Vec3(2.0 * a * x.x(), 2.0 * a * x.y(), a * a - r * r) / d);
    }
    return out;
}

/// Everything a run needs, in dimensionless units.
struct Problem {
    std::shared_ptr<const FemContext> ctx;
    EnergyModel model;
    double alpha = 1.0;
    double tau = 1.0;
    double time_unit = 1.0;  // seconds per unit of t (1 for the core model)
    InitialData initial;
    double k = 0.0;
    double t_final = 0.0;
    double epsilon = 0.0;
};

inline ModelKind model_kind(const RunConfig& c)
{
    if (c.model) {
        return *c.model;
    }
    return c.preset == Preset::nutation ? ModelKind::thinfilm : ModelKind::core;
}

/// Resolves a configuration into mesh, model, initial data and step sizes.
/// Blow-up defaults: k = h/10, T = 2, eps = h/10. Nutation defaults: 10 fs,
/// 30 ps, eps = 1e-6 on the ellipse mesh.
inline Problem build_problem(const RunConfig& c)
{
    c.validate();
    Problem p;
    const ModelKind kind = model_kind(c);

    double length_unit = 1.0;
    if (kind == ModelKind::thinfilm) {
        const RescaledProblem r = rescale(c.material);
        p.model = r.model;
        p.alpha = r.alpha;
        p.tau = r.tau;
        p.time_unit = r.time_unit;
        length_unit = r.length_unit;
        PulseParams pulse = c.pulse;
        pulse.time_unit = r.time_unit;
        p.model.applied_field = [pulse](double t) { return pulse_field(t, pulse); };
    } else {
        p.model = EnergyModel::core();
        p.alpha = c.alpha;
        p.tau = c.tau;
    }

    Mesh mesh = [&]() {
        if (!c.mesh_file.empty()) {
            return load_mesh(c.mesh_file);
        }
        if (c.preset == Preset::nutation) {
            return generate_ellipse(c.material.semi_axis_a / length_unit, c.material.semi_axis_b / length_unit,
                                    c.ellipse_rings);
        }
        return generate_uniform_square(c.level, c.diagonal);
    }();

    if (c.preset == Preset::blowup) {
        p.initial = blowup_initial_data(mesh);
    } else {
        const std::size_t n = mesh.num_vertices();
        p.initial = {NodalVectorField::constant(n, Vec3::UnitX()), NodalVectorField(n)};
    }
    p.ctx = std::make_shared<const FemContext>(std::move(mesh));
    const double h = p.ctx->mesh.h();

    if (c.k) {
        p.k = *c.k;
    } else if (c.k_over_h) {
        p.k = *c.k_over_h * h;
    } else if (c.dt_seconds) {
        p.k = *c.dt_seconds / p.time_unit;
    } else {
        p.k = c.preset == Preset::nutation ? 10e-15 / p.time_unit : h / 10.0;
    }

    if (c.t_final) {
        p.t_final = *c.t_final;
    } else if (c.t_final_seconds) {
        p.t_final = *c.t_final_seconds / p.time_unit;
    } else {
        p.t_final = c.preset == Preset::nutation ? 30e-12 / p.time_unit : 2.0;
    }

    if (c.epsilon) {
        p.epsilon = *c.epsilon;
    } else if (c.epsilon_over_h) {
        p.epsilon = *c.epsilon_over_h * h;
    } else {
        p.epsilon = c.preset == Preset::nutation ? 1e-6 : h / 10.0;
    }
    return p;
}

/// Invariant and energy-law measurements of the last accepted step.
struct StepDiagnostics {
    double unit_length = 0.0;
    /// AMM: max |m.w|; TPS: max |v_new . m_old| relative to max(1, max |v_new|)
    double orthogonality = 0.0;
    /// TPS: lhs - rhs of the energy inequality; AMM: defect of the energy identity
    double energy_defect = 0.0;
    /// 1 + J_h before the step, the scale of the energy tolerances
    double energy_scale = 1.0;
};

/// One run of either integrator; steps on demand so callers can inspect
/// every state.
class Simulation {
public:
    Simulation(Scheme scheme, Problem problem, FixedPointConfig fp = {}, LinearSolverConfig solver = {},
               bool strict = false)
        : scheme_(scheme), problem_(std::move(problem)), fp_(fp), solver_(solver), strict_(strict),
          assembler_(*problem_.ctx)
    {
        if (!(problem_.k > 0.0) || !(problem_.t_final > 0.0)) {
            throw ConfigError("time-step and final time must be positive");
        }
        problem_.model.validate();
        fp_.tolerance = problem_.epsilon > 0.0 ? problem_.epsilon : fp_.tolerance;
        const auto& m0 = problem_.initial.m0;
        if (unit_length_defect(m0) > kUnitLengthTolerance) {
            throw FieldError("initial magnetization is not unit length");
        }
        if (scheme_ == Scheme::amm) {
            amm_.m = m0;
            amm_.w = init_w(m0, problem_.initial.v0);
        } else {
            tps_.m = m0;
            tps_.v = problem_.initial.v0;
        }
        n_steps_ = static_cast<std::size_t>(std::floor(problem_.t_final / problem_.k * (1.0 + 1e-12)));
        collect_advisories();
    }

    static Simulation from_config(const RunConfig& c)
    {
        FixedPointConfig fp;
        fp.max_iterations = c.max_iterations;
        fp.measure = c.measure;
        LinearSolverConfig solver{c.solver_tolerance, c.solver_max_iterations, c.dense_threshold};
        return Simulation(c.scheme, build_problem(c), fp, solver, c.strict);
    }

    const Problem& problem() const noexcept { return problem_; }
    const FemContext& context() const noexcept { return *problem_.ctx; }
    Scheme scheme() const noexcept { return scheme_; }
    std::size_t total_steps() const noexcept { return n_steps_; }
    std::size_t step_index() const noexcept { return scheme_ == Scheme::amm ? amm_.step : tps_.step; }
    bool finished() const noexcept { return step_index() >= n_steps_; }
    double time() const noexcept { return scheme_ == Scheme::amm ? amm_.t : tps_.t; }
    const NodalVectorField& magnetization() const noexcept { return scheme_ == Scheme::amm ? amm_.m : tps_.m; }
    /// v for the tangent plane runs, w for the angular momentum method.
    const NodalVectorField& auxiliary() const noexcept { return scheme_ == Scheme::amm ? amm_.w : tps_.v; }
    const std::vector<std::string>& advisories() const noexcept { return advisories_; }
    const StepDiagnostics& diagnostics() const noexcept { return diag_; }
    const AmmStepResult& last_amm_step() const noexcept { return last_amm_; }
    int last_iterations() const noexcept { return last_iterations_; }
    long total_iterations() const noexcept { return total_iterations_; }

    double alpha() const noexcept { return problem_.alpha; }
    /// Inertial coefficient of the energy functional (0 in LLG mode).
    double tau_effective() const noexcept { return scheme_ == Scheme::llg_tps ? 0.0 : problem_.tau; }

    TpsParameters tps_parameters() const
    {
        return {problem_.alpha, problem_.tau, problem_.k, scheme_ != Scheme::llg_tps};
    }
    AmmParameters amm_parameters() const { return {problem_.alpha, problem_.tau, problem_.k}; }

    /// Advances one step; returns the iteration count of that step.
    int advance()
    {
        const FemContext& ctx = *problem_.ctx;
        if (scheme_ == Scheme::amm) {
            const AmmParameters p = amm_parameters();
            AmmStepResult r = amm_step(amm_, problem_.model, ctx, p, fp_);
            const AmmEnergyIdentity id = amm_energy_identity(problem_.model, ctx, amm_, r, p);
            diag_.unit_length = unit_length_defect(r.state.m);
            diag_.orthogonality = orthogonality_defect(r.state.m, r.state.w);
            diag_.energy_defect = id.defect();
            diag_.energy_scale = 1.0 + std::abs(id.j_before);
            last_iterations_ = r.iterations;
            amm_ = r.state;
            last_amm_ = std::move(r);
        } else {
            const TpsParameters p = tps_parameters();
            TpsStepResult r = tps_step(tps_, problem_.model, assembler_, p, solver_);
            const TpsEnergyLaw law = tps_energy_law(problem_.model, ctx, tps_, r.state, p);
            diag_.unit_length = unit_length_defect(r.state.m);
            const double vmax = r.state.v.matrix().rowwise().norm().maxCoeff();
            diag_.orthogonality = orthogonality_defect(tps_.m, r.state.v) / std::max(1.0, vmax);
            diag_.energy_defect = law.excess();
            diag_.energy_scale = 1.0 + std::abs(law.rhs);
            last_iterations_ = r.solver_iterations;
            tps_ = std::move(r.state);
        }
        total_iterations_ += last_iterations_;
        if (strict_) {
            enforce_invariants();
        }
        return last_iterations_;
    }

    ObservableRow observe() const
    {
        const FemContext& ctx = *problem_.ctx;
        const NodalVectorField& m = magnetization();
        ObservableRow row;
        row.t = time();
        const Vec3 avg = average(ctx.mass, m);
        row.m1 = avg.x();
        row.m2 = avg.y();
        row.m3 = avg.z();
        const EnergyComponents e = energy(problem_.model, ctx, m, row.t);
        row.exchange = e.exchange;
        row.kinetic = kinetic_energy(ctx, auxiliary(), tau_effective());
        row.tot = e.total() + row.kinetic;
        row.w1infty = seminorm_w1inf(ctx.mesh, m);
        row.iters = step_index() == 0 ? 0 : last_iterations_;
        return row;
    }

    /// Whether the energy law of the scheme is exact enough here to be enforced.
    bool energy_law_enforced() const
    {
        if (scheme_ == Scheme::amm) {
            return !static_cast<bool>(problem_.model.applied_field);
        }
        return !problem_.model.has_lower_order_terms() && angle_condition_.satisfied();
    }

private:
    void collect_advisories()
    {
        const FemContext& ctx = *problem_.ctx;
        const double h_min = ctx.mesh.h_min();
        if (scheme_ == Scheme::amm) {
            const AmmCflAdvisory a
                = validate_cfl_amm(problem_.k, h_min, problem_.tau, problem_.alpha, estimate_inverse_constant(ctx));
            if (a.warning) {
                advisories_.push_back(a.message);
            }
        } else {
            const CflAdvisory a = validate_cfl_tps(problem_.k, h_min);
            if (a.warning) {
                advisories_.push_back(a.message);
            }
        }
        angle_condition_ = check_angle_condition(ctx.mesh, ctx.stiffness);
        if (scheme_ != Scheme::amm && !angle_condition_.satisfied()) {
            advisories_.push_back("mesh violates the angle condition (" + std::to_string(angle_condition_.violations)
                                  + " positive off-diagonal stiffness entries); the energy law is not guaranteed");
        }
    }

    void enforce_invariants() const
    {
        const std::string where = " after step " + std::to_string(step_index());
        if (diag_.unit_length > 1e-8) {
            throw InvariantViolation("unit-length drift " + std::to_string(diag_.unit_length) + where);
        }
        if (diag_.orthogonality > 1e-8) {
            throw InvariantViolation("orthogonality defect " + std::to_string(diag_.orthogonality) + where);
        }
        if (energy_law_enforced()) {
            const double slack = 1e-9 * diag_.energy_scale;
            const bool broken = scheme_ == Scheme::amm ? std::abs(diag_.energy_defect) > slack
                                                       : diag_.energy_defect > slack;
            if (broken) {
                throw InvariantViolation("energy law violated by " + std::to_string(diag_.energy_defect) + where);
            }
        }
    }

    Scheme scheme_;
    Problem problem_;
    FixedPointConfig fp_;
    LinearSolverConfig solver_;
    bool strict_;
    TangentSystemAssembler assembler_;
    AmmState amm_;
    TpsState tps_;
    AmmStepResult last_amm_;
    StepDiagnostics diag_;
    AngleConditionReport angle_condition_;
    std::vector<std::string> advisories_;
    std::size_t n_steps_ = 0;
    int last_iterations_ = 0;
    long total_iterations_ = 0;
};

/// Mean iteration count over the rows of accepted steps (the t = 0 row is skipped).
inline double iteration_statistics(const std::vector<ObservableRow>& rows)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 && rows[i].iters == 0) {
            continue;
        }
        sum += rows[i].iters;
        ++count;
    }
    if (count == 0) {
        throw std::invalid_argument("iteration statistics of an empty run");
    }
    return sum / static_cast<double>(count);
}

struct RunSummary {
    std::size_t steps = 0;
    double final_time = 0.0;
    double mean_iterations = 0.0;
    std::vector<ObservableRow> rows;
    std::vector<std::string> advisories;
};

/// Row sink invoked for every emitted row (cadence applied).
using RowSink = std::function<void(const ObservableRow&)>;

/// Drives a simulation to its final time, emitting a row at t = 0, every
/// `cadence` steps and at the final step.
inline RunSummary drive(Simulation& sim, int cadence, const RowSink& sink = {}, int snapshot_cadence = 0,
                        const std::function<void(const Simulation&)>& snapshot = {})
{
    RunSummary out;
    out.advisories = sim.advisories();
    auto emit = [&](const ObservableRow& row) {
        out.rows.push_back(row);
        if (sink) {
            sink(row);
        }
    };
    emit(sim.observe());
    if (snapshot && snapshot_cadence > 0) {
        snapshot(sim);
    }
    while (!sim.finished()) {
        sim.advance();
        const std::size_t i = sim.step_index();
        if (i % static_cast<std::size_t>(cadence) == 0 || sim.finished()) {
            emit(sim.observe());
        }
        if (snapshot && snapshot_cadence > 0 && i % static_cast<std::size_t>(snapshot_cadence) == 0) {
            snapshot(sim);
        }
    }
    out.steps = sim.step_index();
    out.final_time = sim.time();
    out.mean_iterations = out.steps == 0 ? 0.0 : static_cast<double>(sim.total_iterations()) / out.steps;
    return out;
}

inline std::string snapshot_path(const std::string& prefix, std::size_t step)
{
    return prefix + "_" + std::to_string(step) + ".vtk";
}

/// Full run: CSV streamed to config.csv (if set), optional VTK snapshots and
/// a final-state dump at <vtk_prefix>_final.vtk. The prefix defaults to the
/// CSV path without its extension. NonConvergence propagates after the rows
/// produced so far have been flushed.
inline RunSummary run(const RunConfig& config, std::ostream* log = nullptr)
{
    Simulation sim = Simulation::from_config(config);
    if (log) {
        for (const auto& a : sim.advisories()) {
            *log << "warning: " << a << '\n';
        }
    }
    std::ofstream csv;
    if (!config.csv.empty()) {
        csv.open(config.csv);
        if (!csv) {
            throw IoError("cannot open " + config.csv + " for writing");
        }
        write_csv_header(csv);
    }
    std::string prefix = config.vtk_prefix;
    if (prefix.empty() && !config.csv.empty()) {
        const auto dot = config.csv.find_last_of('.');
        const auto slash = config.csv.find_last_of('/');
        prefix = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? config.csv.substr(0, dot)
                                                                                         : config.csv;
    }
    RowSink sink;
    if (csv.is_open()) {
        sink = [&csv](const ObservableRow& r) { write_csv_row(csv, r); };
    }
    auto snapshot = [&](const Simulation& s) {
        write_vtk(snapshot_path(prefix, s.step_index()), s.context().mesh, s.magnetization());
    };
    RunSummary summary;
    try {
        summary = drive(sim, config.cadence, sink, prefix.empty() ? 0 : config.snapshot_cadence, snapshot);
    } catch (...) {
        if (csv.is_open()) {
            csv.flush();
        }
        throw;
    }
    if (csv.is_open()) {
        csv.flush();
        if (!csv) {
            throw IoError("write to " + config.csv + " failed");
        }
    }
    if (!prefix.empty()) {
        write_vtk(prefix + "_final.vtk", sim.context().mesh, sim.magnetization());
    }
    return summary;
}

struct Table1Cell {
    int level = 0;
    double delta = 0.0;
    bool converged = false;
    double mean_iterations = 0.0;
    std::size_t steps = 0;
    /// step at which the iteration gave up, when it did
    std::size_t failed_step = 0;
};

struct Table1Options {
    double epsilon = 1e-12;
    int max_iterations = 1000;
    double t_final = 2.0;
    DiagonalPattern diagonal = DiagonalPattern::alternating;
    IncrementMeasure measure = IncrementMeasure::squared_sum;
};

/// Mean fixed-point iteration count of the blow-up run with k = delta * h.
inline Table1Cell table1_cell(int level, double delta, const Table1Options& opt = {})
{
    RunConfig c;
    c.preset = Preset::blowup;
    c.scheme = Scheme::amm;
    c.level = level;
    c.diagonal = opt.diagonal;
    c.k_over_h = delta;
    c.t_final = opt.t_final;
    c.epsilon = opt.epsilon;
    c.max_iterations = opt.max_iterations;
    c.measure = opt.measure;
    Simulation sim = Simulation::from_config(c);
    Table1Cell cell;
    cell.level = level;
    cell.delta = delta;
    try {
        while (!sim.finished()) {
            sim.advance();
        }
        cell.converged = true;
    } catch (const NonConvergence& e) {
        cell.failed_step = e.step();
    }
    cell.steps = sim.step_index();
    cell.mean_iterations = cell.steps == 0 ? 0.0 : static_cast<double>(sim.total_iterations()) / cell.steps;
    return cell;
}

} // namespace illg
