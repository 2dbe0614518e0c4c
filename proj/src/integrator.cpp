#include "almech/integrator.hpp"

#include <cmath>
#include <sstream>

namespace almech {

namespace {

State axpy(const State& s, double h, const Dynamics& d) {
    return {s.x + h * d.xdot, s.y + h * d.ydot};
}

State rk4_step(const DynamicsFn& f, const State& s, double h) {
    Dynamics k1 = f(s);
    Dynamics k2 = f(axpy(s, 0.5 * h, k1));
    Dynamics k3 = f(axpy(s, 0.5 * h, k2));
    Dynamics k4 = f(axpy(s, h, k3));
    State out = s;
    out.x += (h / 6.0) * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
    out.y += (h / 6.0) * (k1.ydot + 2.0 * k2.ydot + 2.0 * k3.ydot + k4.ydot);
    return out;
}

Trajectory run_fixed(const DynamicsFn& f, const State& state0, const IntegratorConfig& cfg,
                     const std::map<std::string, MonitorFn>& monitors,
                     const ProjectionFn& projection, double h) {
    Trajectory traj;
    const long nsteps = std::lround(cfg.horizon / h);
    State s = state0;
    double t = 0.0;
    auto record = [&](double tt, const State& ss) {
        traj.times.push_back(tt);
        traj.states.push_back(ss);
        for (const auto& [name, fn] : monitors) traj.monitors[name].push_back(fn(tt, ss));
    };
    record(t, s);
    for (long i = 0; i < nsteps; ++i) {
        try {
            s = rk4_step(f, s, h);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "integration step failed at t=" << t << ": " << e.what();
            throw StepFailure(os.str());
        }
        if (projection) s = projection(s);
        t = (i + 1) * h;
        if ((i + 1) % cfg.sample_every == 0 || i + 1 == nsteps) record(t, s);
    }
    return traj;
}

} // namespace

Trajectory integrate(const DynamicsFn& dynamics, const State& state0, const IntegratorConfig& cfg,
                     const std::map<std::string, MonitorFn>& monitors,
                     const ProjectionFn& projection) {
    cfg.validate();
    Trajectory traj = run_fixed(dynamics, state0, cfg, monitors, projection, cfg.step);
    if (cfg.method == RKMethod::rk4_halving) {
        IntegratorConfig half = cfg;
        half.sample_every = 2 * cfg.sample_every;
        Trajectory fine = run_fixed(dynamics, state0, half, monitors, projection, cfg.step / 2.0);
        const State& a = traj.back();
        const State& b = fine.back();
        double err = 0.0;
        err = std::max(err, (a.x - b.x).cwiseAbs().maxCoeff());
        err = std::max(err, (a.y - b.y).cwiseAbs().maxCoeff());
        traj.richardson_error = err / 15.0;
    }
    return traj;
}

MonitorReport monitor_report(const Trajectory& traj) {
    MonitorReport rep;
    for (const auto& [name, series] : traj.monitors) {
        if (series.empty()) continue;
        double drift = 0.0, amax = 0.0;
        for (double v : series) {
            drift = std::max(drift, std::abs(v - series.front()));
            amax = std::max(amax, std::abs(v));
        }
        rep.max_drift[name] = drift;
        rep.max_abs[name] = amax;
    }
    return rep;
}

std::vector<double> series_derivative(const std::vector<double>& times,
                                      const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<double> out(n, 0.0);
    if (n < 5) return out;
    const double h = times[1] - times[0];
    for (size_t i = 2; i + 2 < n; ++i)
        out[i] = (-values[i + 2] + 8.0 * values[i + 1] - 8.0 * values[i - 1] + values[i - 2]) / (12.0 * h);
    // one-sided fourth-order ends
    out[0] = (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3] - 3.0 * values[4]) / (12.0 * h);
    out[1] = (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3] + values[4]) / (12.0 * h);
    out[n - 2] = -(-3.0 * values[n - 1] - 10.0 * values[n - 2] + 18.0 * values[n - 3] - 6.0 * values[n - 4] + values[n - 5]) / (12.0 * h);
    out[n - 1] = -(-25.0 * values[n - 1] + 48.0 * values[n - 2] - 36.0 * values[n - 3] + 16.0 * values[n - 4] - 3.0 * values[n - 5]) / (12.0 * h);
    return out;
}

} // namespace almech
