#pragma once

// Angular momentum method: midpoint rule for the first-order system in (m, w),
// solved by the constraint-preserving linear fixed-point iteration. Under mass
// lumping both linear problems of a sweep decouple into one 3x3 system per
// vertex, solved in closed form.

#include "illg/fem.hpp"
#include "illg/field.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace illg {

/// The fixed-point iteration exceeded its iteration budget.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(std::size_t step, int iterations, double last_increment, double last_ratio)
        : std::runtime_error("fixed-point iteration did not converge in step " + std::to_string(step)
                             + " after " + std::to_string(iterations) + " iterations (last increment "
                             + std::to_string(last_increment) + ", last contraction ratio "
                             + std::to_string(last_ratio) + "); time-step likely violates the CFL bound"),
          step_(step), iterations_(iterations), last_increment_(last_increment), last_ratio_(last_ratio) {}

    std::size_t step() const noexcept { return step_; }
    int iterations() const noexcept { return iterations_; }
    double last_increment() const noexcept { return last_increment_; }
    double last_ratio() const noexcept { return last_ratio_; }

private:
    std::size_t step_;
    int iterations_;
    double last_increment_;
    double last_ratio_;
};

/// How the sweep increment compared against the tolerance is formed from
/// du = ||u^{l+1} - u^l||_h and dz = ||z^{l+1} - z^l||_h.
enum class IncrementMeasure {
    /// du + dz
    norm_sum,
    /// du^2 + dz^2
    squared_sum,
};

inline double increment_value(IncrementMeasure measure, double du, double dz)
{
    return measure == IncrementMeasure::squared_sum ? du * du + dz * dz : du + dz;
}

struct FixedPointConfig {
    double tolerance = 1e-12;
    int max_iterations = 1000;
    /// Keep the per-sweep increments in the step result.
    bool record_increments = false;
    IncrementMeasure measure = IncrementMeasure::norm_sum;

    void validate() const
    {
        if (!(tolerance > 0.0) || max_iterations < 1) {
            throw std::invalid_argument("fixed-point tolerance must be positive and the budget at least 1");
        }
    }
};

struct AmmParameters {
    double alpha = 1.0;
    double tau = 1.0;
    double k = 0.01;
};

struct AmmState {
    std::size_t step = 0;
    double t = 0.0;
    NodalVectorField m;
    NodalVectorField w;
    double last_residual = 0.0;
    int last_iterations = 0;
};

/// w0(z) = m0(z) x v0(z); inputs must satisfy |m0| = 1 and m0.v0 = 0 at the vertices.
inline NodalVectorField init_w(const NodalVectorField& m0, const NodalVectorField& v0,
                               double tolerance = kUnitLengthTolerance)
{
    require_same_size(m0, v0);
    for (std::size_t z = 0; z < m0.size(); ++z) {
        const Vec3 m = m0[z];
        const Vec3 v = v0[z];
        if (std::abs(m.norm() - 1.0) > tolerance) {
            throw FieldError("init_w: |m0| = " + std::to_string(m.norm()) + " at vertex " + std::to_string(z));
        }
        if (std::abs(m.dot(v)) > tolerance * std::max(1.0, v.norm())) {
            throw FieldError("init_w: m0 . v0 = " + std::to_string(m.dot(v)) + " at vertex "
                             + std::to_string(z));
        }
    }
    return cross(m0, v0);
}

/// Unique u with a u + c (u x w) = b, for a > 0.
inline Vec3 solve_nodal_cross(double a, double c, const Vec3& w, const Vec3& b)
{
    const double cw2 = c * c * w.squaredNorm();
    return (a * a * b - a * c * b.cross(w) + c * c * b.dot(w) * w) / (a * (a * a + cw2));
}

struct SweepResult {
    NodalVectorField u;
    NodalVectorField z;
    /// P_h h_eff[u] used for z.
    NodalVectorField heff;
};

/// One sweep (u, z) <- (u^{l+1}, z^{l+1}) given the previous z^l:
///   2 u + k u x z_prev = 2 m
///   2 tau z + k u x z  = k u x P_h h_eff[u] + 2 alpha u x m + 2 tau w
/// at every vertex; the lumped weights cancel.
inline SweepResult fixed_point_sweep(const FemContext& ctx, const EnergyModel& model, const AmmParameters& p,
                                     const NodalVectorField& m, const NodalVectorField& w,
                                     const NodalVectorField& z_prev, double t_mid)
{
    const std::size_t n = m.size();
    SweepResult out{NodalVectorField(n), NodalVectorField(n), NodalVectorField()};
    for (std::size_t i = 0; i < n; ++i) {
        out.u.set(i, solve_nodal_cross(2.0, p.k, z_prev[i], 2.0 * m[i]));
    }
    out.heff = effective_field(model, ctx, out.u, t_mid);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 u = out.u[i];
        const Vec3 rhs = p.k * u.cross(out.heff[i]) + 2.0 * p.alpha * u.cross(m[i]) + 2.0 * p.tau * w[i];
        // k u x z = k z x (-u)
        out.z.set(i, solve_nodal_cross(2.0 * p.tau, p.k, -u, rhs));
    }
    return out;
}

struct AmmStepResult {
    AmmState state;
    int iterations = 0;
    /// r = z^{l_i+1} - z^{l_i}
    NodalVectorField residual;
    /// m^{i+1/2} and P_h h_eff[m^{i+1/2}] at the accepted iterate.
    NodalVectorField midpoint;
    NodalVectorField heff_midpoint;
    /// Sweep increments in the configured measure, when recorded.
    std::vector<double> increments;
};

/// Sweeps until the increment drops below the tolerance, then
/// m_{i+1} = 2u - m_i and w_{i+1} = 2z - w_i. The applied field is taken at
/// the midpoint time t_i + k/2.
inline AmmStepResult amm_step(const AmmState& state, const EnergyModel& model, const FemContext& ctx,
                              const AmmParameters& p, const FixedPointConfig& fp)
{
    if (!(p.k > 0.0) || !(p.tau > 0.0)) {
        throw std::invalid_argument("angular momentum method needs k > 0 and tau > 0");
    }
    fp.validate();
    const double t_mid = state.t + 0.5 * p.k;
    NodalVectorField u_prev = state.m;
    NodalVectorField z_prev = state.w;
    AmmStepResult out;
    double last_increment = std::numeric_limits<double>::infinity();
    double last_ratio = std::numeric_limits<double>::quiet_NaN();
    for (int it = 1; it <= fp.max_iterations; ++it) {
        SweepResult sweep = fixed_point_sweep(ctx, model, p, state.m, state.w, z_prev, t_mid);
        const double increment
            = increment_value(fp.measure, norm_h(ctx.mass, sweep.u - u_prev), norm_h(ctx.mass, sweep.z - z_prev));
        if (fp.record_increments) {
            out.increments.push_back(increment);
        }
        if (std::isfinite(last_increment) && last_increment > 0.0) {
            last_ratio = increment / last_increment;
        }
        last_increment = increment;
        if (increment <= fp.tolerance) {
            out.iterations = it;
            out.residual = sweep.z - z_prev;
            out.state.step = state.step + 1;
            out.state.t = state.t + p.k;
            out.state.m = 2.0 * sweep.u - state.m;
            out.state.w = 2.0 * sweep.z - state.w;
            out.state.last_iterations = it;
            out.state.last_residual = norm_h(ctx.mass, out.residual);
            out.midpoint = std::move(sweep.u);
            out.heff_midpoint = std::move(sweep.heff);
            return out;
        }
        if (!std::isfinite(increment)) {
            break;
        }
        u_prev = std::move(sweep.u);
        z_prev = std::move(sweep.z);
    }
    throw NonConvergence(state.step, fp.max_iterations, last_increment, last_ratio);
}

/// Measured contraction ratios q_l = Delta_{l+1} / Delta_l from a sweep
/// history; needs at least three sweeps, stops at an exact zero increment.
inline std::vector<double> contraction_probe(const std::vector<double>& increments)
{
    std::vector<double> ratios;
    if (increments.size() < 3) {
        return ratios;
    }
    for (std::size_t l = 0; l + 1 < increments.size(); ++l) {
        if (increments[l] == 0.0) {
            break;
        }
        ratios.push_back(increments[l + 1] / increments[l]);
    }
    return ratios;
}

struct AmmCflAdvisory {
    /// k_0 = tau / (2 + alpha + tau)
    double k0 = 0.0;
    /// (sqrt(tau) / C_inv) h_min
    double k_mesh_bound = 0.0;
    /// q = [(2 + alpha + tau) k + C_inv^2 k^2 h_min^-2] / (2 tau)
    double predicted_q = 0.0;
    bool warning = false;
    std::string message;
};

inline AmmCflAdvisory validate_cfl_amm(double k, double h_min, double tau, double alpha, double c_inv)
{
    AmmCflAdvisory out;
    out.k0 = tau / (2.0 + alpha + tau);
    out.k_mesh_bound = std::sqrt(tau) / c_inv * h_min;
    out.predicted_q = ((2.0 + alpha + tau) * k + c_inv * c_inv * k * k / (h_min * h_min)) / (2.0 * tau);
    if (out.predicted_q >= 1.0) {
        out.warning = true;
        out.message = "angular momentum method: predicted contraction bound q = " + std::to_string(out.predicted_q)
                      + " >= 1 (k0 = " + std::to_string(out.k0) + ", mesh bound "
                      + std::to_string(out.k_mesh_bound) + "); the fixed-point iteration may diverge";
    }
    return out;
}

/// Terms of the discrete energy law with inexact fixed point:
///   J^{i+1} + alpha k |d_t m|_h^2 + k <m^{i+1/2} x r, P_h h_eff - alpha d_t m>_h - J^i.
struct AmmEnergyIdentity {
    double j_before = 0.0;
    double j_after = 0.0;
    double dissipation = 0.0;
    double residual_term = 0.0;

    double defect() const noexcept { return j_after + dissipation + residual_term - j_before; }
};

inline AmmEnergyIdentity amm_energy_identity(const EnergyModel& model, const FemContext& ctx,
                                             const AmmState& before, const AmmStepResult& step,
                                             const AmmParameters& p)
{
    AmmEnergyIdentity out;
    out.j_before = total_functional_j(model, ctx, before.m, before.w, p.tau, before.t);
    out.j_after = total_functional_j(model, ctx, step.state.m, step.state.w, p.tau, step.state.t);
    const NodalVectorField dtm = (1.0 / p.k) * (step.state.m - before.m);
    const double dtm_norm = norm_h(ctx.mass, dtm);
    out.dissipation = p.alpha * p.k * dtm_norm * dtm_norm;
    out.residual_term = p.k * inner_h(ctx.mass, cross(step.midpoint, step.residual),
                                      step.heff_midpoint - p.alpha * dtm);
    return out;
}

} // namespace illg
