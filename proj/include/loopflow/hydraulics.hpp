#pragma once

// Pressure-drop models for the three supported fluid regimes:
//
//   * natural gas  - Renouard correlation on squared pressures,
//   * water        - Darcy-Weisbach with the implicit Colebrook friction factor,
//   * ventilation  - Atkinson resistance form.
//
// Every model exposes the pressure function f(Q) and its derivative f'(Q).
// f is extended as an odd function of the flow (f(-Q) = -f(Q)) so that a flow
// against the assumed direction contributes a negative drop, and f' >= 0
// everywhere.  These two properties are what the loop solvers rely on.

#include <cmath>
#include <sstream>
#include <string>
#include <variant>

#include "loopflow/errors.hpp"

namespace loopflow::hydraulics {

// --- fluid model descriptors -----------------------------------------------

struct RenouardGas {
    double relative_density = 0.64;  // density relative to air
};

struct DarcyWater {
    double density = 1000.0;              // kg/m^3
    double kinematic_viscosity = 1.0e-6;  // m^2/s
};

struct AtkinsonVent {
    double density = 1.2;  // kg/m^3
};

using FluidModel = std::variant<RenouardGas, DarcyWater, AtkinsonVent>;

// Value/derivative pair of the pipe pressure function at a given flow.
// The value is in Pa^2 for gas (difference of squared pressures) and in Pa
// for water and ventilation; the derivative is per (m^3/s).
struct PressureFunction {
    double value = 0.0;
    double derivative = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

// --- gas: Renouard ----------------------------------------------------------

inline constexpr double kRenouardCoefficient = 4810.0;

// f(Q) = sign(Q) * 4810 * rho_r * L * |Q|^1.82 / D^4.82   [Pa^2]
// Q in m^3/s (at reference conditions), D and L in m.
inline double renouard_f(double q, double diameter, double length,
                         double relative_density) {
    const double magnitude = kRenouardCoefficient * relative_density * length *
                             std::pow(std::abs(q), 1.82) /
                             std::pow(diameter, 4.82);
    return q < 0.0 ? -magnitude : magnitude;
}

// f'(Q) = 1.82 * 4810 * rho_r * L * |Q|^0.82 / D^4.82  (>= 0)
inline double renouard_fprime(double q, double diameter, double length,
                              double relative_density) {
    return 1.82 * kRenouardCoefficient * relative_density * length *
           std::pow(std::abs(q), 0.82) / std::pow(diameter, 4.82);
}

// Mean gas velocity in a pipe carrying q m^3/s expressed at reference
// pressure, when the line operates at absolute pressure `pressure_abs`.
// The volume is rescaled to line conditions before dividing by the area.
inline double gas_velocity(double q, double diameter, double pressure_abs,
                           double reference_pressure = 101325.0) {
    if (!(reference_pressure > 0.0) || pressure_abs < reference_pressure) {
        std::ostringstream msg;
        msg << "gas_velocity: need pressure_abs >= reference_pressure > 0, got "
            << pressure_abs << " and " << reference_pressure;
        throw ConfigError(msg.str());
    }
    const double area = kPi * diameter * diameter / 4.0;
    return q * (reference_pressure / pressure_abs) / area;
}

// --- water: Colebrook + Darcy-Weisbach --------------------------------------

// Friction factor lambda from the implicit Colebrook relation
//
//   1/sqrt(lambda) = -2 log10( 2.51/(Re sqrt(lambda)) + (eps/D)/3.71 )
//
// valid for turbulent flow only (Re > 4000).  Solved by fixed-point iteration
// on x = 1/sqrt(lambda); the final residual of the defining relation is
// required to be below 1e-12.
inline double colebrook_lambda(double reynolds, double relative_roughness) {
    if (!(reynolds > 4000.0)) {
        std::ostringstream msg;
        msg << "colebrook_lambda: Re = " << reynolds
            << " is outside the turbulent regime (need Re > 4000)";
        throw OutOfRegimeError(msg.str());
    }
    if (relative_roughness < 0.0) {
        throw ConfigError("colebrook_lambda: relative roughness must be >= 0");
    }

    double x = 7.0;  // 1/sqrt(lambda), lambda ~= 0.02 to start
    for (int i = 0; i < 200; ++i) {
        const double next =
            -2.0 * std::log10(2.51 * x / reynolds + relative_roughness / 3.71);
        if (std::abs(next - x) < 1e-14 * std::abs(next)) {
            x = next;
            break;
        }
        x = next;
    }
    const double residual =
        x + 2.0 * std::log10(2.51 * x / reynolds + relative_roughness / 3.71);
    if (!(std::abs(residual) < 1e-12)) {
        throw NonConvergenceError(
            "colebrook_lambda: fixed-point iteration did not reach 1e-12",
            residual);
    }
    return 1.0 / (x * x);
}

// Reynolds number for a circular pipe: Re = |Q| D / (A nu).
inline double reynolds_number(double q, double diameter,
                              double kinematic_viscosity) {
    const double area = kPi * diameter * diameter / 4.0;
    return std::abs(q) * diameter / (area * kinematic_viscosity);
}

// Darcy-Weisbach head loss as a pressure drop:
//   f(Q) = sign(Q) * 8 rho lambda L Q^2 / (pi^2 D^5)   [Pa]
// The derivative treats lambda as frozen at the current flow, giving
// f'(Q) = 2 |f(Q)| / |Q|.
inline PressureFunction darcy_pressure(double q, double diameter, double length,
                                       double roughness, const DarcyWater& fluid) {
    if (q == 0.0) {
        return {0.0, 0.0};
    }
    const double re = reynolds_number(q, diameter, fluid.kinematic_viscosity);
    const double lambda = colebrook_lambda(re, roughness / diameter);
    const double magnitude = 8.0 * fluid.density * lambda * length * q * q /
                             (kPi * kPi * std::pow(diameter, 5.0));
    PressureFunction out;
    out.value = q < 0.0 ? -magnitude : magnitude;
    out.derivative = 2.0 * magnitude / std::abs(q);
    return out;
}

// --- ventilation: Atkinson ---------------------------------------------------

// f(Q) = sign(Q) * rho / (2 Cd^2 A^2) * Q^2   [Pa],  f'(Q) = rho/(Cd^2 A^2) |Q|
inline PressureFunction atkinson_pressure(double q, double discharge_coeff,
                                          double opening_area,
                                          const AtkinsonVent& fluid) {
    if (!(discharge_coeff > 0.0) || !(opening_area > 0.0)) {
        throw ConfigError(
            "atkinson_pressure: discharge coefficient and opening area must be "
            "positive");
    }
    const double k =
        fluid.density / (discharge_coeff * discharge_coeff * opening_area *
                         opening_area);
    PressureFunction out;
    out.value = 0.5 * k * q * std::abs(q);
    out.derivative = k * std::abs(q);
    return out;
}

}  // namespace loopflow::hydraulics
