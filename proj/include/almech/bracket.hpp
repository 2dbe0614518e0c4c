#ifndef ALMECH_BRACKET_HPP
#define ALMECH_BRACKET_HPP

#include "almech/constrained.hpp"
#include "almech/integrator.hpp"
#include "almech/nonlinear.hpp"

namespace almech {

// Observable on the total space. When custom_diff is present it supplies the
// prolongation-coframe components of df directly (quasi-coordinate functions
// whose differential is a frame coform rather than an honest gradient).
struct Observable {
    std::string label;
    ScalarField f;
    std::function<std::pair<Vec, Vec>(const State&)> custom_diff; // (X-part, V-part), chart basis

    double operator()(const State& s) const { return f(s.x, s.y); }
};

Observable base_coordinate_observable(std::shared_ptr<const AlgebroidChart> chart, int index,
                                      const std::string& label);
Observable fiber_linear_observable(std::shared_ptr<const AlgebroidChart> chart, const Vec& coeffs,
                                   const std::string& label);
// Differential equals the dual frame coform e^alpha (no honest primitive).
Observable quasi_coordinate_observable(std::shared_ptr<const AlgebroidChart> chart, int alpha,
                                       const std::string& label);

// df in the chart prolongation coframe {X^alpha, V^alpha} at a state.
Vec observable_differential(const AlgebroidChart& chart, const Observable& f, const State& s,
                            const FDConfig& fd);

// Hamiltonian section: solve omega_L X_f = df (2m x 2m system).
Vec hamiltonian_section(const LagrangianField& Lf, const Observable& f, const State& s);

// --- nonholonomic bracket ---
// Linear systems evaluate in the adapted basis (original-coordinate
// observables are converted); nonlinear systems in the chart basis.
double nh_bracket(const LinearNHSystem& sys, const Observable& f, const Observable& g,
                  const State& original);
double nh_bracket(const NonlinearNHSystem& sys, const Observable& f, const Observable& g,
                  const State& s);

// Restricted-form route (solve on T^D D only); cross-check for linear systems.
double nh_bracket_restricted(const LinearNHSystem& sys, const Observable& f, const Observable& g,
                             const State& original);

// Jacobiator {f,{g,h}} + {g,{h,f}} + {h,{f,g}} through the bracket machinery;
// inner brackets are re-evaluated as observables of the state.
double jacobiator(const NonlinearNHSystem& sys, const Observable& f, const Observable& g,
                  const Observable& h, const State& s);

struct EvolutionReport {
    double max_residual = 0.0;
    double max_reactive = 0.0; // max |rho^1(R_L) f| over samples
};

// Residual of fdot = rho^1(R_L) f + {f, E_L}_nh along an on-constraint
// trajectory (R_L = 0 for linear constraints).
EvolutionReport evolution_residual(const LinearNHSystem& sys, const Observable& f,
                                   const Trajectory& traj);
EvolutionReport evolution_residual(const NonlinearNHSystem& sys, const Observable& f,
                                   const Trajectory& traj);

} // namespace almech

#endif
