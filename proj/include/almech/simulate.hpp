#ifndef ALMECH_SIMULATE_HPP
#define ALMECH_SIMULATE_HPP

#include <random>

#include "almech/constrained.hpp"
#include "almech/integrator.hpp"
#include "almech/nonlinear.hpp"

namespace almech {

// Free Euler-Lagrange flow; states and monitors in chart coordinates.
Trajectory integrate_free(const LagrangianField& Lf, const State& start,
                          const IntegratorConfig& cfg,
                          const std::map<std::string, MonitorFn>& monitors = {});

// Constrained flow of a linear system. Integration happens in adapted
// coordinates with y^A pinned to zero between steps; sampled states and
// monitors are in the original frame.
Trajectory integrate_constrained(const LinearNHSystem& sys, const State& start_original,
                                 const IntegratorConfig& cfg,
                                 const std::map<std::string, MonitorFn>& monitors = {});

// Constrained flow of a nonlinear system in chart coordinates; optional
// post-step Newton projection onto phi = 0 per the integrator config.
Trajectory integrate_constrained(const NonlinearNHSystem& sys, const State& start,
                                 const IntegratorConfig& cfg,
                                 const std::map<std::string, MonitorFn>& monitors = {});

// Uniform sample in [lo, hi]^k.
Vec random_vec(std::mt19937_64& rng, int k, double lo, double hi);

// Random on-constraint state near a reference (original coordinates).
State random_on_constraint(const LinearNHSystem& sys, const State& center, double spread,
                           std::mt19937_64& rng);
State random_on_constraint(const NonlinearNHSystem& sys, const State& center, double spread,
                           std::mt19937_64& rng);

} // namespace almech

#endif
