#pragma once

// Tangent plane scheme: backward-Euler solve for the velocity in the discrete
// tangent space of the current magnetization, followed by nodal projection.

#include "illg/fem.hpp"
#include "illg/field.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace illg {

class LinearSolveError : public std::runtime_error {
public:
    LinearSolveError(double residual, int iterations)
        : std::runtime_error("linear solver did not converge: relative residual "
                             + std::to_string(residual) + " after " + std::to_string(iterations)
                             + " iterations"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

struct LinearSolverConfig {
    double relative_tolerance = 1e-10;
    int max_iterations = 500;
    /// Systems on meshes with at most this many vertices are solved densely.
    std::size_t dense_threshold = 200;
};

/// Damping and inertia of the rescaled equation. `inertial = false` drops the
/// tau d_t v term (plain LLG), everything else is shared.
struct TpsParameters {
    double alpha = 1.0;
    double tau = 1.0;
    double k = 0.01;
    bool inertial = true;
};

struct TpsState {
    std::size_t step = 0;
    double t = 0.0;
    NodalVectorField m;
    NodalVectorField v;
};

using ReducedMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Linear system in tangent coordinates: unknown a with
/// v(z) = a[2z] t1(z) + a[2z+1] t2(z).
struct TangentSystem {
    ReducedMatrix matrix;
    Eigen::VectorXd rhs;
    TangentFrame frame;
};

/// Builds reduced systems on a fixed mesh, reusing the 2x2-block sparsity of
/// the stiffness pattern between steps.
class TangentSystemAssembler {
public:
    explicit TangentSystemAssembler(const FemContext& ctx) : ctx_(&ctx)
    {
        const auto& s = ctx.stiffness.matrix();
        const auto n = s.rows();
        pattern_.resize(2 * n, 2 * n);
        Eigen::VectorXi per_row(2 * n);
        for (Eigen::Index z = 0; z < n; ++z) {
            const int nnz = s.outerIndexPtr()[z + 1] - s.outerIndexPtr()[z];
            per_row[2 * z] = per_row[2 * z + 1] = 2 * nnz;
        }
        pattern_.reserve(per_row);
        for (Eigen::Index z = 0; z < n; ++z) {
            for (int a = 0; a < 2; ++a) {
                for (ReducedMatrix::InnerIterator it(s, z); it; ++it) {
                    pattern_.insert(2 * z + a, 2 * it.col()) = 0.0;
                    pattern_.insert(2 * z + a, 2 * it.col() + 1) = 0.0;
                }
            }
        }
        pattern_.makeCompressed();
    }

    /// Full operator (tau/k + alpha) M + C(m) + k c_ex S restricted to K_h[m];
    /// right-hand side (tau/k) M v_prev - c_ex S m + M h_lower(m, t).
    TangentSystem assemble(const NodalVectorField& m, const NodalVectorField& v_prev, const EnergyModel& model,
                           const TpsParameters& p, double t) const
    {
        const FemContext& ctx = *ctx_;
        TangentSystem sys{pattern_, Eigen::VectorXd::Zero(pattern_.rows()), tangent_frame(m)};
        const auto& s = ctx.stiffness.matrix();
        const auto& w = ctx.mass.weights();
        const double inertia = p.inertial ? p.tau / p.k : 0.0;
        const double beta = inertia + p.alpha;
        const double diffusion = p.k * model.exchange_coeff;
        const auto& t1 = sys.frame.t1;
        const auto& t2 = sys.frame.t2;

        double* values = sys.matrix.valuePtr();
        const int* outer = sys.matrix.outerIndexPtr();
        for (Eigen::Index z = 0; z < s.rows(); ++z) {
            const Vec3 tz[2] = {t1[z], t2[z]};
            const Vec3 mz = m[z];
            const Vec3 mxt[2] = {mz.cross(tz[0]), mz.cross(tz[1])};
            for (int a = 0; a < 2; ++a) {
                int pos = outer[2 * z + a];
                for (ReducedMatrix::InnerIterator it(s, z); it; ++it) {
                    const Eigen::Index y = it.col();
                    const Vec3 ty[2] = {t1[y], t2[y]};
                    for (int b = 0; b < 2; ++b) {
                        double value = diffusion * it.value() * tz[a].dot(ty[b]);
                        if (y == z) {
                            value += w[z] * ((a == b ? beta : 0.0) + tz[a].dot(mxt[b]));
                        }
                        values[pos++] = value;
                    }
                }
            }
        }

        NodalVectorField load = ctx.stiffness.apply(m);
        load *= -model.exchange_coeff;
        NodalVectorField source(m.size());
        if (model.has_lower_order_terms()) {
            source = lower_order_field(model, m, t);
        }
        if (inertia != 0.0) {
            source += inertia * v_prev;
        }
        load.matrix() += (source.matrix().array().colwise() * w.array()).matrix();
        sys.rhs = sys.frame.restrict(load);
        return sys;
    }

private:
    const FemContext* ctx_;
    ReducedMatrix pattern_;
};

struct LinearSolveResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool dense = false;
};

inline LinearSolveResult solve_tangent_system(const TangentSystem& sys, const LinearSolverConfig& cfg,
                                              const Eigen::VectorXd* guess = nullptr)
{
    LinearSolveResult out;
    const double bnorm = sys.rhs.norm();
    if (bnorm == 0.0) {
        out.x = Eigen::VectorXd::Zero(sys.rhs.size());
        return out;
    }
    if (static_cast<std::size_t>(sys.rhs.size()) <= 2 * cfg.dense_threshold) {
        const Eigen::MatrixXd dense(sys.matrix);
        out.x = dense.partialPivLu().solve(sys.rhs);
        out.dense = true;
    } else {
        Eigen::GMRES<ReducedMatrix, Eigen::DiagonalPreconditioner<double>> gmres;
        gmres.set_restart(cfg.max_iterations);
        gmres.setMaxIterations(cfg.max_iterations);
        gmres.setTolerance(cfg.relative_tolerance);
        gmres.compute(sys.matrix);
        out.x = guess ? Eigen::VectorXd(gmres.solveWithGuess(sys.rhs, *guess))
                      : Eigen::VectorXd(gmres.solve(sys.rhs));
        out.iterations = static_cast<int>(gmres.iterations());
        if (gmres.info() != Eigen::Success) {
            throw LinearSolveError(gmres.error(), out.iterations);
        }
    }
    out.relative_residual = (sys.matrix * out.x - sys.rhs).norm() / bnorm;
    if (!out.x.allFinite()) {
        throw LinearSolveError(out.relative_residual, out.iterations);
    }
    return out;
}

struct TpsStepResult {
    TpsState state;
    int solver_iterations = 0;
    double relative_residual = 0.0;
};

/// m_new(z) = (m(z) + k v(z)) / |m(z) + k v(z)|
inline NodalVectorField nodal_projection_update(const NodalVectorField& m, const NodalVectorField& v, double k)
{
    NodalVectorField out = m + k * v;
    out.matrix().rowwise().normalize();
    return out;
}

/// One step with a caller-owned assembler (pattern reuse across steps).
inline TpsStepResult tps_step(const TpsState& state, const EnergyModel& model,
                              const TangentSystemAssembler& assembler, const TpsParameters& p,
                              const LinearSolverConfig& solver = {})
{
    if (!(p.k > 0.0)) {
        throw std::invalid_argument("time-step must be positive");
    }
    const TangentSystem sys = assembler.assemble(state.m, state.v, model, p, state.t);
    const Eigen::VectorXd guess = sys.frame.restrict(state.v);
    const LinearSolveResult sol = solve_tangent_system(sys, solver, &guess);

    TpsStepResult out;
    out.state.step = state.step + 1;
    out.state.t = state.t + p.k;
    out.state.v = sys.frame.lift(sol.x);
    out.state.m = nodal_projection_update(state.m, out.state.v, p.k);
    out.solver_iterations = sol.iterations;
    out.relative_residual = sol.relative_residual;
    return out;
}

inline TpsStepResult tps_step(const TpsState& state, const EnergyModel& model, const FemContext& ctx,
                              const TpsParameters& p, const LinearSolverConfig& solver = {})
{
    const TangentSystemAssembler assembler(ctx);
    return tps_step(state, model, assembler, p, solver);
}

inline TangentSystem assemble_tangent_system(const NodalVectorField& m, const NodalVectorField& v_prev,
                                             const FemContext& ctx, const EnergyModel& model,
                                             const TpsParameters& p, double t)
{
    return TangentSystemAssembler(ctx).assemble(m, v_prev, model, p, t);
}

struct CflAdvisory {
    bool warning = false;
    std::string message;
};

/// Convergence needs k = o(h_min^(d/2)); k >= h_min^(d/2) is reported.
inline CflAdvisory validate_cfl_tps(double k, double h_min, int dimension = 2)
{
    const double bound = std::pow(h_min, 0.5 * dimension);
    CflAdvisory out;
    if (k >= bound) {
        out.warning = true;
        out.message = "tangent plane scheme: k = " + std::to_string(k) + " >= h_min^(d/2) = "
                      + std::to_string(bound) + "; convergence is not guaranteed";
    }
    return out;
}

/// Both sides of the discrete energy law
///   J(m1, v1) + alpha k |v1|_h^2 + tau k^2/2 |d_t v1|_h^2 + k^2/2 |grad v1|^2 <= J(m0, v0).
struct TpsEnergyLaw {
    double lhs = 0.0;
    double rhs = 0.0;

    double excess() const noexcept { return lhs - rhs; }
};

inline TpsEnergyLaw tps_energy_law(const EnergyModel& model, const FemContext& ctx, const TpsState& before,
                                   const TpsState& after, const TpsParameters& p)
{
    const double tau = p.inertial ? p.tau : 0.0;
    TpsEnergyLaw law;
    law.rhs = total_functional_j(model, ctx, before.m, before.v, tau, before.t);
    const double v_norm = norm_h(ctx.mass, after.v);
    const NodalVectorField dv = (1.0 / p.k) * (after.v - before.v);
    const double dv_norm = norm_h(ctx.mass, dv);
    const double grad_v = model.exchange_coeff * stiffness_form(ctx.stiffness, after.v, after.v);
    law.lhs = total_functional_j(model, ctx, after.m, after.v, tau, after.t) + p.alpha * p.k * v_norm * v_norm
              + 0.5 * tau * p.k * p.k * dv_norm * dv_norm + 0.5 * p.k * p.k * grad_v;
    return law;
}

} // namespace illg
