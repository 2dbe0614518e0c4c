#include "almech/simulate.hpp"

namespace almech {

Trajectory integrate_free(const LagrangianField& Lf, const State& start,
                          const IntegratorConfig& cfg,
                          const std::map<std::string, MonitorFn>& monitors) {
    DynamicsFn fn = [&Lf](const State& s) { return free_dynamics(Lf, s); };
    return integrate(fn, start, cfg, monitors);
}

Trajectory integrate_constrained(const LinearNHSystem& sys, const State& start_original,
                                 const IntegratorConfig& cfg,
                                 const std::map<std::string, MonitorFn>& monitors) {
    State ad0 = sys.snap(sys.to_adapted(start_original));
    DynamicsFn fn = [&sys](const State& s) { return sys.dynamics_adapted(s); };
    ProjectionFn pin = [&sys](const State& s) {
        State out = s;
        for (int A = sys.r(); A < sys.m(); ++A) out.y[A] = 0.0;
        return out;
    };
    std::map<std::string, MonitorFn> wrapped;
    for (const auto& [name, mon] : monitors)
        wrapped[name] = [&sys, mon](double t, const State& ad) {
            return mon(t, sys.from_adapted(ad));
        };
    Trajectory traj = integrate(fn, ad0, cfg, wrapped, pin);
    for (State& s : traj.states) s = sys.from_adapted(s);
    return traj;
}

Trajectory integrate_constrained(const NonlinearNHSystem& sys, const State& start,
                                 const IntegratorConfig& cfg,
                                 const std::map<std::string, MonitorFn>& monitors) {
    sys.require_on_constraint(start);
    DynamicsFn fn = [&sys](const State& s) { return sys.dynamics_extended(s); };
    ProjectionFn proj = nullptr;
    if (cfg.post_step_projection)
        proj = [&sys, tol = cfg.projection_tol](const State& s) {
            return sys.project_onto_constraint(s, tol);
        };
    return integrate(fn, start, cfg, monitors, proj);
}

Vec random_vec(std::mt19937_64& rng, int k, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(k);
    for (int i = 0; i < k; ++i) v[i] = dist(rng);
    return v;
}

State random_on_constraint(const LinearNHSystem& sys, const State& center, double spread,
                           std::mt19937_64& rng) {
    State s;
    s.x = center.x + random_vec(rng, sys.chart().n, -spread, spread);
    State ad = sys.to_adapted({s.x, center.y});
    ad.y += random_vec(rng, sys.m(), -spread, spread);
    for (int A = sys.r(); A < sys.m(); ++A) ad.y[A] = 0.0;
    return sys.from_adapted(ad);
}

State random_on_constraint(const NonlinearNHSystem& sys, const State& center, double spread,
                           std::mt19937_64& rng) {
    State s;
    s.x = center.x + random_vec(rng, sys.chart().n, -spread, spread);
    s.y = center.y + random_vec(rng, sys.m(), -spread, spread);
    return sys.project_onto_constraint(s, 1e-12);
}

} // namespace almech
