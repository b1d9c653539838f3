#pragma once

#include "gustnav/encoding.hpp"
#include "gustnav/field.hpp"
#include "gustnav/scenario.hpp"

namespace gustnav::oracle {

struct SolverConfig {
    double viscosity = 1.5e-5;  // kinematic, m^2/s (air)
    int max_iters = 20000;      // outer pseudo-time steps
    double tol = 1e-5;          // max |central-difference divergence| on the output, 1/s
    double density = 1.196;     // kg/m^3

    // Pseudo-time stepping and steadiness detection.
    double cfl = 0.6;
    double steady_tol = 2e-4;  // max |du/dt| / inlet speed, 1/s

    // Constant eddy viscosity turb_coeff * inlet_speed * cell added to the
    // molecular value. Keeps the effective building-scale Reynolds number
    // below the vortex-shedding onset so a steady state exists, and makes
    // solutions at different inlet speeds Reynolds-similar.
    double turb_coeff = 0.4;

    void validate() const;
};

// Outlet gauge pressure in Pa, interpolated linearly in inlet speed between
// the 5 m/s and 10 m/s reference points (0.015 kPa and 0.0625 kPa).
double outlet_pressure(double inlet_speed);

// Steady incompressible solve on a labeled grid. Chorin-style projection on a
// staggered grid marched in pseudo-time until the velocity stops changing,
// then emitted as a cell-centered field whose central-difference divergence
// vanishes by construction. Boundary values on the emitted field are exact:
// inlet cells carry the inlet velocity, obstacle and wall cells carry zero,
// outlet cells copy their inward neighbor.
//
// Non-convergence within max_iters is reported through converged=false on the
// result, never silently.
VelocityField solve_steady(const encoding::GeometryGrid& labels, const domain::WindSpec& inlet,
                           const SolverConfig& cfg = {});

// Full-domain solve for a scenario: buildings rasterized on the global grid,
// domain edges facing the wind become inlets, opposite edges outlets, lateral
// edges zero-gradient.
VelocityField solve_city(const domain::Scenario& scenario, const SolverConfig& cfg = {});

// Label grid used by solve_city (exposed for tests and the CLI).
encoding::GeometryGrid city_labels(const domain::Scenario& scenario);

// Max |du/dx + dv/dy| by central differences over free cells whose four
// neighbors are also free. This is the quantity solve_steady drives below
// cfg.tol.
double max_central_divergence(const VelocityField& f, const encoding::GeometryGrid& labels);

}  // namespace gustnav::oracle
