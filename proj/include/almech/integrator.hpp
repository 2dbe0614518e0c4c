#ifndef ALMECH_INTEGRATOR_HPP
#define ALMECH_INTEGRATOR_HPP

#include <map>
#include <string>

#include "almech/algebroid.hpp"

namespace almech {

enum class RKMethod { rk4, rk4_halving };

struct IntegratorConfig {
    RKMethod method = RKMethod::rk4;
    double step = 1e-3;
    double horizon = 10.0;
    int sample_every = 1;
    bool post_step_projection = false; // nonlinear constraints only
    double projection_tol = 1e-12;

    void validate() const {
        if (!(step > 0.0) || !(horizon > 0.0) || sample_every < 1)
            throw InvalidParameters("IntegratorConfig: step and horizon must be positive");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::map<std::string, std::vector<double>> monitors;
    double richardson_error = 0.0; // endpoint estimate, rk4_halving only

    const State& front() const { return states.front(); }
    const State& back() const { return states.back(); }
    size_t size() const { return states.size(); }
};

using DynamicsFn = std::function<Dynamics(const State&)>;
using MonitorFn = std::function<double(double, const State&)>;
// Optional fiber projection applied after each accepted step.
using ProjectionFn = std::function<State(const State&)>;

// Classical fixed-step RK4 on the combined (x, y) state. rk4_halving runs the
// same path twice (h and h/2) and stores the Richardson endpoint estimate.
Trajectory integrate(const DynamicsFn& dynamics, const State& state0, const IntegratorConfig& cfg,
                     const std::map<std::string, MonitorFn>& monitors = {},
                     const ProjectionFn& projection = nullptr);

struct MonitorReport {
    std::map<std::string, double> max_drift;    // max |m(t) - m(0)|
    std::map<std::string, double> max_abs;      // max |m(t)|
};

MonitorReport monitor_report(const Trajectory& traj);

// Fourth-order central time derivative of a sampled series (interior points).
std::vector<double> series_derivative(const std::vector<double>& times,
                                      const std::vector<double>& values);

} // namespace almech

#endif
