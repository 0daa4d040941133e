#pragma once

// Micromagnetic energy, discrete effective field, and the rescaling of
// physical thin-film parameters to the dimensionless problem.

#include "illg/fem.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace illg {

inline constexpr double kVacuumPermeability = 4.0e-7 * std::numbers::pi;

/// Spatially uniform applied field as a function of dimensionless time.
using AppliedField = std::function<Vec3(double)>;

/// Energy
///   (exchange_coeff / 2) |grad m|^2
///   + uniaxial_coeff (1 - (m.e)^2) - h_ext(t).m + planar_coeff (m.a)^2
/// with the zero-order terms integrated by vertex quadrature.
struct EnergyModel {
    double exchange_coeff = 1.0;
    double uniaxial_coeff = 0.0;
    Vec3 easy_axis = Vec3::UnitX();
    double planar_coeff = 0.0;
    Vec3 hard_axis = Vec3::UnitZ();
    AppliedField applied_field;

    /// Exchange-only model with unit coefficient.
    static EnergyModel core() { return EnergyModel{}; }

    Vec3 applied(double t) const { return applied_field ? applied_field(t) : Vec3::Zero(); }

    bool has_lower_order_terms() const
    {
        return uniaxial_coeff != 0.0 || planar_coeff != 0.0 || static_cast<bool>(applied_field);
    }

    void validate() const
    {
        if (!(exchange_coeff >= 0.0) || !(uniaxial_coeff >= 0.0) || !(planar_coeff >= 0.0)) {
            throw std::invalid_argument("energy coefficients must be nonnegative");
        }
        if (std::abs(easy_axis.norm() - 1.0) > 1e-12 || std::abs(hard_axis.norm() - 1.0) > 1e-12) {
            throw std::invalid_argument("anisotropy axes must have unit length");
        }
    }
};

struct EnergyComponents {
    double exchange = 0.0;
    double anisotropy = 0.0;
    double zeeman = 0.0;
    double planar = 0.0;

    double total() const noexcept { return exchange + anisotropy + zeeman + planar; }
};

/// Zero-order part of the effective field, evaluated pointwise at the vertices.
inline NodalVectorField lower_order_field(const EnergyModel& model, const NodalVectorField& m, double t)
{
    NodalVectorField h(m.size());
    auto& hm = h.matrix();
    const auto& mm = m.matrix();
    if (model.uniaxial_coeff != 0.0) {
        const Eigen::VectorXd proj = mm * model.easy_axis;
        hm += (2.0 * model.uniaxial_coeff) * proj * model.easy_axis.transpose();
    }
    if (model.planar_coeff != 0.0) {
        const Eigen::VectorXd proj = mm * model.hard_axis;
        hm -= (2.0 * model.planar_coeff) * proj * model.hard_axis.transpose();
    }
    if (model.applied_field) {
        hm.rowwise() += model.applied(t).transpose();
    }
    return h;
}

/// P_h h_eff[m] at time t.
inline NodalVectorField effective_field(const EnergyModel& model, const FemContext& ctx,
                                        const NodalVectorField& m, double t)
{
    NodalVectorField h = apply_ph_heff(ctx.mass, ctx.stiffness, m, model.exchange_coeff);
    if (model.has_lower_order_terms()) {
        h += lower_order_field(model, m, t);
    }
    return h;
}

inline EnergyComponents energy(const EnergyModel& model, const FemContext& ctx, const NodalVectorField& m,
                               double t)
{
    if (m.size() != ctx.num_vertices()) {
        throw FieldError("field size does not match mesh");
    }
    EnergyComponents e;
    e.exchange = 0.5 * model.exchange_coeff * stiffness_form(ctx.stiffness, m, m);
    const auto& w = ctx.mass.weights();
    const auto& mm = m.matrix();
    if (model.uniaxial_coeff != 0.0) {
        const Eigen::VectorXd proj = mm * model.easy_axis;
        e.anisotropy = model.uniaxial_coeff * w.dot((1.0 - proj.array().square()).matrix());
    }
    if (model.applied_field) {
        const Eigen::VectorXd proj = mm * model.applied(t);
        e.zeeman = -w.dot(proj);
    }
    if (model.planar_coeff != 0.0) {
        const Eigen::VectorXd proj = mm * model.hard_axis;
        e.planar = model.planar_coeff * w.dot(proj.array().square().matrix());
    }
    return e;
}

/// Kinetic contribution (tau / 2) ||aux||_h^2.
inline double kinetic_energy(const FemContext& ctx, const NodalVectorField& aux, double tau)
{
    const double n = norm_h(ctx.mass, aux);
    return 0.5 * tau * n * n;
}

/// Extended energy J_h(m, aux) = E[m] + (tau / 2) ||aux||_h^2.
inline double total_functional_j(const EnergyModel& model, const FemContext& ctx, const NodalVectorField& m,
                                 const NodalVectorField& aux, double tau, double t)
{
    return energy(model, ctx, m, t).total() + kinetic_energy(ctx, aux, tau);
}

/// Material and geometry in SI units.
struct PhysicalParams {
    double saturation_magnetization = 8.0e5;  // A/m
    double exchange_stiffness = 1.3e-11;      // J/m
    double anisotropy_constant = 5.0e2;       // coefficient of the uniaxial integral
    double alpha = 0.023;
    double gamma0 = 2.211e5;                   // m/(A s)
    double tau = 0.023 * 12.3e-12;            // s
    double thickness = 3.0e-9;                 // m
    double semi_axis_a = 100.0e-9;             // m
    double semi_axis_b = 50.0e-9;              // m

    void validate() const
    {
        if (!(saturation_magnetization > 0.0) || !(exchange_stiffness > 0.0) || !(anisotropy_constant > 0.0)
            || !(alpha > 0.0) || !(gamma0 > 0.0) || !(thickness > 0.0) || !(semi_axis_a > 0.0)
            || !(semi_axis_b > 0.0)) {
            throw std::invalid_argument("physical parameters must be strictly positive");
        }
        if (!(tau >= 0.0)) {
            throw std::invalid_argument("relaxation time must be nonnegative");
        }
    }
};

/// Dimensionless thin-film problem. Lengths are in units of the exchange
/// length, times in units of 1/(gamma0 Ms), fields in units of Ms, and the
/// energy is divided by mu0 Ms^2 times the common thickness factor.
struct RescaledProblem {
    EnergyModel model;
    double tau = 0.0;
    double alpha = 0.0;
    double time_unit = 0.0;    // seconds per dimensionless time unit
    double length_unit = 0.0;  // exchange length in meters

    double to_seconds(double t) const { return t * time_unit; }
    double from_seconds(double seconds) const { return seconds / time_unit; }
};

inline double exchange_length(const PhysicalParams& p)
{
    return std::sqrt(2.0 * p.exchange_stiffness
                     / (kVacuumPermeability * p.saturation_magnetization * p.saturation_magnetization));
}

/// Thin-film energy A|grad m|^2 + K(1 - (m.e1)^2) - mu0 Ms H.m + (mu0 Ms^2 / 2)(m.e3)^2
/// in dimensionless form. The applied field is left unset.
inline RescaledProblem rescale(const PhysicalParams& p)
{
    p.validate();
    const double ms = p.saturation_magnetization;
    const double energy_density = kVacuumPermeability * ms * ms;
    const double lex = exchange_length(p);

    RescaledProblem out;
    out.length_unit = lex;
    out.time_unit = 1.0 / (p.gamma0 * ms);
    out.tau = p.gamma0 * ms * p.tau;
    out.alpha = p.alpha;
    // A |grad m|^2 written as (coeff / 2)|grad' m|^2 after x' = x / lex; equals 1 by definition of lex.
    out.model.exchange_coeff = 2.0 * p.exchange_stiffness / (energy_density * lex * lex);
    out.model.uniaxial_coeff = p.anisotropy_constant / energy_density;
    out.model.easy_axis = Vec3::UnitX();
    out.model.planar_coeff = 0.5;
    out.model.hard_axis = Vec3::UnitZ();
    return out;
}

/// F(t) = amplitude * sin(2 pi f t) on 0 <= t <= window, zero elsewhere;
/// t in seconds. Field points along `direction`, in units of Ms.
struct PulseParams {
    double amplitude = 0.01;
    double frequency = 500.0e9;  // Hz
    double window = 2.0e-12;     // s
    double time_unit = 1.0;      // seconds per dimensionless time unit
    Vec3 direction = Vec3::UnitY();
};

inline Vec3 pulse_field(double t, const PulseParams& p)
{
    const double seconds = t * p.time_unit;
    if (seconds < 0.0 || seconds > p.window) {
        return Vec3::Zero();
    }
    return p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency * seconds) * p.direction;
}

} // namespace illg
