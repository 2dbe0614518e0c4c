#include "almech/verify.hpp"

#include <cmath>
#include <sstream>

namespace almech {
namespace verify {

using systems::SystemDescriptor;

namespace {

CheckResult below(const std::string& name, double measured, double tol, std::string detail = "") {
    return {name, measured, tol, measured <= tol, std::move(detail)};
}

CheckResult above(const std::string& name, double measured, double floor, std::string detail = "") {
    return {name, measured, floor, measured > floor, std::move(detail)};
}

std::map<std::string, MonitorFn> energy_monitor(const SystemDescriptor& d) {
    const LagrangianField* L = &d.L;
    return {{"E", [L](double, const State& s) { return energy(*L, s); }}};
}

Trajectory integrate_descriptor(const SystemDescriptor& d, const State& start,
                                const IntegratorConfig& cfg,
                                const std::map<std::string, MonitorFn>& monitors) {
    if (d.is_linear()) return integrate_constrained(*d.linear, start, cfg, monitors);
    return integrate_constrained(*d.nonlinear, start, cfg, monitors);
}

double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double state_deviation(const State& a, const State& b) {
    double dev = 0.0;
    if (a.x.size() > 0) dev = std::max(dev, (a.x - b.x).cwiseAbs().maxCoeff());
    if (a.y.size() > 0) dev = std::max(dev, (a.y - b.y).cwiseAbs().maxCoeff());
    return dev;
}

// ---------- structure equations ----------

std::vector<std::string> charts_for(const SystemDescriptor& d) {
    if (d.name == "suslov") return {"suslov_algebra"};
    if (d.name == "chaplygin_sleigh") return {"sleigh_algebra"};
    if (d.name == "veselova") return {"veselova_action"};
    if (d.name == "mobile_robot") return {"robot_quotient", "robot_full"};
    if (d.name == "rolling_ball") return {"ball_full", "ball_quotient"};
    return {};
}

std::vector<CheckResult> check_structure(const SystemDescriptor& d, uint64_t seed) {
    std::vector<CheckResult> out;
    auto charts = systems::all_charts();
    std::mt19937_64 rng(seed);
    for (const auto& name : charts_for(d)) {
        for (const auto& nc : charts) {
            if (nc.name != name) continue;
            std::vector<Vec> pts;
            for (int i = 0; i < 100; ++i) pts.push_back(nc.sample_point(rng));
            auto rep = check_structure_equations(*nc.chart, pts, 1e-6);
            double worst = std::max({rep.max_residual_anchor, rep.max_residual_jacobi,
                                     rep.max_residual_antisymmetry});
            out.push_back(below("structure_equations(" + name + ")", worst, 1e-6));
        }
    }
    return out;
}

// ---------- regularity ----------

std::vector<CheckResult> check_regularity(const SystemDescriptor& d, uint64_t seed) {
    std::mt19937_64 rng(seed);
    double min_eig = std::numeric_limits<double>::infinity();
    double min_rcond = 1.0;
    for (int i = 0; i < 100; ++i) {
        State s = d.sample(rng);
        Mat C;
        if (d.is_linear()) {
            C = d.linear->regularity_matrix(d.linear->snap(d.linear->to_adapted(s)));
        } else {
            C = d.nonlinear->regularity_matrix(s);
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(C);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        min_rcond = std::min(min_rcond, rcond_estimate(C));
    }
    std::ostringstream os;
    os << "min rcond " << min_rcond;
    return {above("regularity_sweep(" + d.name + ")", min_eig, 0.0, os.str())};
}

// ---------- route equivalence ----------

// Constraint functions y~^A(x, y) = (B(x)^{-1} y)_A with chain-rule gradients.
std::vector<ScalarField> adapted_coordinate_constraints(const LinearNHSystem& sys) {
    std::vector<ScalarField> phis;
    auto B = sys.frame().B;
    const int n = sys.chart().n, m = sys.m();
    FDConfig fd = sys.chart().fd;
    for (int A = sys.r(); A < m; ++A) {
        ScalarField f;
        f.n_base = n;
        f.n_fiber = m;
        f.eval = [B, A](const Vec& x, const Vec& y) {
            return (B(x).inverse() * y)[A];
        };
        f.analytic_grad = [B, A, n, m, fd](const Vec& x, const Vec& y) {
            Mat Binv = B(x).inverse();
            Vec g = Vec::Zero(n + m);
            for (int i = 0; i < n; ++i) {
                Vec ei = Vec::Zero(n);
                ei[i] = 1.0;
                Mat dB = fd_matrix_directional(B, x, ei, fd.step_base);
                g[i] = (-Binv * dB * Binv * y)[A];
            }
            g.tail(m) = Binv.row(A).transpose();
            return g;
        };
        phis.push_back(f);
    }
    return phis;
}

std::vector<CheckResult> route_equivalence_linear(const LinearNHSystem& sys,
                                                  const std::function<State(std::mt19937_64&)>& sample,
                                                  const std::string& tag, uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0, worst_nl = 0.0;
    NonlinearNHSystem as_nonlinear(sys.chart_ptr(), sys.lagrangian(),
                                   adapted_coordinate_constraints(sys));
    for (int i = 0; i < 100; ++i) {
        State s = sample(rng);
        auto ld = sys.solve_ld(s);
        Vec direct(2 * sys.m());
        direct.head(sys.m()) = ld.adapted.y;
        direct.tail(sys.m()) = ld.ydot_adapted;
        Vec p = sys.constrained_section_P(ld.adapted);
        Vec pb = sys.constrained_section_Pbar(ld.adapted);
        Vec di = sys.constrained_section_distributional(ld.adapted);
        worst = std::max({worst, (direct - p).cwiseAbs().maxCoeff(),
                          (direct - pb).cwiseAbs().maxCoeff(),
                          (direct - di).cwiseAbs().maxCoeff(),
                          (p - pb).cwiseAbs().maxCoeff(), (pb - di).cwiseAbs().maxCoeff()});
        Dynamics nl = as_nonlinear.dynamics(s);
        worst_nl = std::max(worst_nl, max_abs(nl.ydot - ld.original.ydot));
        worst_nl = std::max(worst_nl, max_abs(nl.xdot - ld.original.xdot));
    }
    return {below("route_equivalence(" + tag + ")", worst, 1e-10),
            below("route_equivalence(" + tag + ",nonlinear-module)", worst_nl, 1e-10)};
}

std::vector<CheckResult> check_routes(const SystemDescriptor& d, uint64_t seed) {
    if (d.is_linear()) return route_equivalence_linear(*d.linear, d.sample, d.name, seed);

    // Rolling ball: with the table at rest the constraints are linear and all
    // routes must agree, including the linear-module cross check.
    auto params = d.params;
    params["Omega"] = 0.0;
    SystemDescriptor still = systems::build(d.name, params);
    std::mt19937_64 rng(seed);
    double worst = 0.0, worst_lin = 0.0;
    const double r = params.at("r");
    Mat B = Mat::Zero(5, 5);
    B.col(0) << r, 0, 0, 1, 0;
    B.col(1) << 0, r, -1, 0, 0;
    B.col(2) << 0, 0, 0, 0, 1;
    B.col(3) << 1, 0, 0, -r, 0;
    B.col(4) << 0, 1, r, 0, 0;
    AdaptedFrame frame;
    frame.r = 3;
    frame.B = [B](const Vec&) { return B; };
    LinearNHSystem lin(still.chart, still.L, frame);
    for (int i = 0; i < 100; ++i) {
        State s = still.sample(rng);
        Vec direct = still.nonlinear->constrained_section(s);
        Vec pb = still.nonlinear->constrained_section_Pbar(s);
        Vec di = still.nonlinear->constrained_section_distributional(s);
        worst = std::max({worst, (direct - pb).cwiseAbs().maxCoeff(),
                          (direct - di).cwiseAbs().maxCoeff()});
        Dynamics a = still.nonlinear->dynamics(s);
        Dynamics b = lin.dynamics(s);
        worst_lin = std::max(worst_lin, (a.ydot - b.ydot).cwiseAbs().maxCoeff());
    }
    return {below("route_equivalence(" + d.name + ",Omega=0)", worst, 1e-10),
            below("route_equivalence(" + d.name + ",linear-module)", worst_lin, 1e-10)};
}

// ---------- oracle match ----------

std::vector<CheckResult> check_oracle(const SystemDescriptor& d, uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        State s = d.sample(rng);
        Dynamics engine = d.is_linear() ? d.linear->dynamics(s) : d.nonlinear->dynamics(s);
        Dynamics oracle = systems::oracle_dynamics(d, s);
        worst = std::max(worst, max_abs(engine.xdot - oracle.xdot));
        worst = std::max(worst, max_abs(engine.ydot - oracle.ydot));
    }
    std::vector<CheckResult> out;
    out.push_back(below("oracle_match(" + d.name + ",pointwise)", worst, 1e-9));

    IntegratorConfig cfg = d.integrator;
    Trajectory engine_traj = integrate_descriptor(d, d.default_state, cfg, {});
    auto oracle_fn = [&d](const State& s) { return d.oracle(s); };
    Trajectory oracle_traj = integrate(oracle_fn, d.default_state, cfg);
    double dev = 0.0;
    for (size_t i = 0; i < engine_traj.size(); ++i)
        dev = std::max(dev, state_deviation(engine_traj.states[i], oracle_traj.states[i]));
    out.push_back(below("oracle_match(" + d.name + ",trajectory)", dev, 1e-6));
    return out;
}

// Multiplier comparison for the Veselova system (closed-form Lagrange
// multiplier against the engine's constraint-force component on gamma).
CheckResult veselova_multiplier(const SystemDescriptor& d, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat I = d.L.metric->G(Vec::Zero(3));
    Mat Iinv = I.inverse();
    const double g = d.params.at("g");
    Vec chi(3);
    chi << 0, 0, 1;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        State s = d.sample(rng);
        auto ld = d.linear->solve_ld(s);
        const Vec& gamma = s.x;
        const Vec& w = s.y;
        Vec Iw = I * w;
        Vec force(3);
        force << Iw[1] * w[2] - Iw[2] * w[1], Iw[2] * w[0] - Iw[0] * w[2],
            Iw[0] * w[1] - Iw[1] * w[0];
        if (g != 0.0) {
            Vec dV = g * chi;
            Vec gx(3);
            gx << gamma[1] * dV[2] - gamma[2] * dV[1], gamma[2] * dV[0] - gamma[0] * dV[2],
                gamma[0] * dV[1] - gamma[1] * dV[0];
            force += gx;
        }
        double lambda = -force.dot(Iinv * gamma) / gamma.dot(Iinv * gamma);
        // The engine convention pairs i_Gamma omega_L - dE_L with X_A, the
        // negative of the multiplier on the d'Alembert side.
        worst = std::max(worst, std::abs(ld.lambda[0] + lambda));
    }
    return below("oracle_match(veselova,multiplier)", worst, 1e-9);
}

// ---------- energy / conservation ----------

std::vector<CheckResult> check_energy(const SystemDescriptor& d, uint64_t /*seed*/) {
    std::vector<CheckResult> out;
    auto monitors = energy_monitor(d);
    if (d.name == "veselova") {
        const LinearNHSystem* sys = d.linear.get();
        monitors["constraint"] = [](double, const State& s) { return s.x.dot(s.y); };
        monitors["sphere"] = [](double, const State& s) { return s.x.norm() - 1.0; };
        (void)sys;
    }
    Trajectory traj = integrate_descriptor(d, d.default_state, d.integrator, monitors);
    auto rep = monitor_report(traj);
    if (d.name == "rolling_ball") {
        // Side-by-side with the drift law integrated along the trajectory.
        const double r = d.params.at("r"), k = d.params.at("k"), Om = d.params.at("Omega");
        const double fac = Om * Om * k * k / (k * k + r * r);
        double law = 0.0;
        for (size_t i = 1; i < traj.size(); ++i) {
            const State& a = traj.states[i - 1];
            const State& b = traj.states[i];
            double fa = fac * (a.x[0] * a.y[0] + a.x[1] * a.y[1]);
            double fb = fac * (b.x[0] * b.y[0] + b.x[1] * b.y[1]);
            law += 0.5 * (fa + fb) * (traj.times[i] - traj.times[i - 1]);
        }
        std::ostringstream os;
        os << "law-predicted net change " << law;
        out.push_back(below("energy(" + d.name + ")", rep.max_drift["E"], 1e-6, os.str()));
    } else {
        out.push_back(below("energy(" + d.name + ")", rep.max_drift["E"], 1e-6));
    }
    if (d.name == "veselova") {
        out.push_back(below("veselova_constraint", rep.max_abs["constraint"], 1e-7));
        out.push_back(below("veselova_sphere_norm", rep.max_abs["sphere"], 1e-7));
    }
    return out;
}

CheckResult check_noether(const SystemDescriptor& d, uint64_t /*seed*/) {
    if (d.name != "suslov") throw ConfigError("noether check is defined for the suslov system");
    auto params = d.params;
    params["I2"] = params["I1"]; // axially symmetric about e3
    params["Gamma1"] = 1.0;
    params["Gamma2"] = 0.0;
    params["Gamma3"] = 0.0; // constraint axis orthogonal to the symmetry axis
    SystemDescriptor sym = systems::build("suslov", params);
    SectionField sigma = constant_section(Vec(Vec::Unit(3, 2)));
    State start{Vec(0), Vec(3)};
    start.y << 0.0, 0.7, 0.5; // on the constraint w1 = 0
    const LagrangianField* L = &sym.L;
    std::map<std::string, MonitorFn> mons{
        {"F", [L, sigma](double, const State& s) { return noether_function(*L, sigma, s); }}};
    Trajectory traj = integrate_constrained(*sym.linear, start, sym.integrator, mons);
    auto rep = monitor_report(traj);
    return below("noether(suslov,I1=I2,Gamma=e1,sigma=e3)", rep.max_drift["F"], 1e-6);
}

// ---------- momentum ----------

std::vector<CheckResult> check_momentum(const SystemDescriptor& d, uint64_t seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    MomentumBundle id_bundle{d.chart->m,
                             [m = d.chart->m](const Vec&) { return Mat::Identity(m, m); }};
    if (d.name == "suslov") {
        // Horizontal symmetry: axially symmetric inertia, constraint axis in
        // the symmetry plane, momentum direction along the symmetry axis.
        auto params = d.params;
        params["I2"] = params["I1"];
        params["Gamma1"] = 1.0;
        params["Gamma2"] = 0.0;
        params["Gamma3"] = 0.0;
        SystemDescriptor sym = systems::build("suslov", params);
        SectionField sigma = constant_section(Vec(Vec::Unit(3, 2)));
        State start{Vec(0), Vec(3)};
        start.y << 0.0, 0.7, 0.5;
        Trajectory traj = integrate_constrained(*sym.linear, start, sym.integrator, {});
        auto rep = momentum_equation_residual(sym.L, id_bundle, sigma, traj, sym.linear.get());
        out.push_back(below("momentum(suslov,horizontal,residual)", rep.max_residual, 1e-6));
        out.push_back(below("momentum(suslov,horizontal,drift)", rep.max_drift, 1e-6));

        // Free axisymmetric body: momentum about the symmetry axis is
        // conserved while the dynamics precesses.
        Trajectory free_traj = integrate_free(sym.L, {Vec(0), Vec(start.y + Vec::Unit(3, 0))},
                                              sym.integrator);
        auto frep = momentum_equation_residual(sym.L, id_bundle, sigma, free_traj, nullptr);
        out.push_back(below("momentum(free-body,residual)", frep.max_residual, 1e-6));
        out.push_back(below("momentum(free-body,drift)", frep.max_drift, 1e-6));

        // Generic direction on a tilted-axis system: the equation holds with
        // both sides nonzero; the momentum itself need not be conserved.
        auto tparams = d.params;
        tparams["Gamma1"] = 0.6;
        tparams["Gamma2"] = 0.0;
        tparams["Gamma3"] = 0.8;
        SystemDescriptor tilted = systems::build("suslov", tparams);
        State s0 = tilted.sample(rng);
        SectionField gen = constant_section(Vec(tilted.linear->frame().B(Vec(0)).col(0)));
        Trajectory gt = integrate_constrained(*tilted.linear, s0, tilted.integrator, {});
        auto grep = momentum_equation_residual(tilted.L, id_bundle, gen, gt, tilted.linear.get());
        out.push_back(below("momentum(suslov,generic,residual)", grep.max_residual, 1e-6));
    } else if (d.name == "chaplygin_sleigh") {
        SectionField sigma = constant_section(Vec(Vec::Unit(3, 1))); // the forward direction
        Trajectory traj = integrate_constrained(*d.linear, d.default_state, d.integrator, {});
        auto rep = momentum_equation_residual(d.L, id_bundle, sigma, traj, d.linear.get());
        out.push_back(below("momentum(sleigh,residual)", rep.max_residual, 1e-6));
    } else if (d.name == "veselova") {
        SectionField sigma;
        sigma.eval = [](const Vec& gamma) -> Vec {
            Vec out(3);
            out << gamma[1], -gamma[0], 0.0; // gamma x e3, always a virtual direction
            return out;
        };
        Trajectory traj = integrate_constrained(*d.linear, d.default_state, d.integrator, {});
        auto rep = momentum_equation_residual(d.L, id_bundle, sigma, traj, d.linear.get());
        out.push_back(below("momentum(veselova,residual)", rep.max_residual, 1e-6));
    } else {
        throw ConfigError("momentum check is not wired for system " + d.name);
    }
    return out;
}

// ---------- reduction ----------

std::vector<CheckResult> check_reduction(const SystemDescriptor& d, uint64_t seed) {
    if (!d.reduction) throw ConfigError("no reduction pair for system " + d.name);
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    const auto& pair = *d.reduction;
    IntegratorConfig cfg = d.integrator;
    ReductionReport rep;
    if (pair.src_lin) {
        rep = verify_reduction(*pair.src_lin, *pair.dst_lin, pair.morphism, pair.src_start, cfg,
                               1e-6, rng);
    } else {
        rep = verify_reduction(*pair.src_nl, *pair.dst_nl, pair.morphism, pair.src_start, cfg,
                               1e-6, rng);
    }
    out.push_back(below("reduction(" + d.name + ",commute)", rep.max_state_deviation, 1e-6));
    out.push_back(below("reduction(" + d.name + ",energy)", rep.max_energy_mismatch, 1e-8));

    // Morphism identities on random base points.
    std::vector<Vec> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(pair.sample_src(rng).x);
    auto adm = check_admissible(pair.morphism, pts, 1e-8);
    auto mph = check_morphism(pair.morphism, pts, 1e-8);
    out.push_back(below("reduction(" + d.name + ",admissible)", adm.max_residual, 1e-8));
    out.push_back(below("reduction(" + d.name + ",morphism)", mph.max_residual, 1e-8));

    if (pair.stage1 && pair.stage2) {
        MorphismSpec staged = compose(*pair.stage1, *pair.stage2);
        Trajectory up = integrate_constrained(*pair.src_lin, pair.src_start, cfg);
        double dev = 0.0;
        for (const State& s : up.states)
            dev = std::max(dev, state_deviation(staged.apply(s), pair.morphism.apply(s)));
        out.push_back(below("reduction(" + d.name + ",staged-vs-direct)", dev, 1e-9));
        ReductionReport r1 = verify_reduction(*pair.src_lin, *pair.mid_lin, *pair.stage1,
                                              pair.src_start, cfg, 1e-6, rng);
        ReductionReport r2 =
            verify_reduction(*pair.mid_lin, *pair.dst_lin, *pair.stage2,
                             pair.stage1->apply(pair.src_start), cfg, 1e-6, rng);
        out.push_back(below("reduction(" + d.name + ",stage1)", r1.max_state_deviation, 1e-6));
        out.push_back(below("reduction(" + d.name + ",stage2)", r2.max_state_deviation, 1e-6));
    }

    if (d.name == "rolling_ball") {
        // Almost-Poisson morphism on fundamental observables.
        auto red_obs = systems::ball_reduced_observables(d);
        std::vector<State> states;
        for (int i = 0; i < 20; ++i) states.push_back(pair.sample_src(rng));
        double worst = 0.0;
        auto pairs = {std::make_pair("x", "pi1"), std::make_pair("pi1", "pi2"),
                      std::make_pair("pi2", "pi3"), std::make_pair("y", "pi2")};
        for (auto [a, b] : pairs)
            worst = std::max(worst, verify_bracket_morphism(*pair.src_nl, *pair.dst_nl,
                                                            pair.morphism, red_obs.at(a),
                                                            red_obs.at(b), states));
        out.push_back(below("reduction(rolling_ball,bracket-morphism)", worst, 1e-7));
    }
    return out;
}

// ---------- Chaplygin reduction ----------

std::vector<CheckResult> check_chaplygin(const SystemDescriptor& d, uint64_t seed) {
    if (d.name != "mobile_robot")
        throw ConfigError("chaplygin check is defined for the mobile_robot system");
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    ChaplyginReduced red = chaplygin_reduce(*d.linear);

    const double R = d.params.at("R"), c = d.params.at("c");
    const double m = d.params.at("m0") + 2.0 * d.params.at("m1");
    const double P = R * R / 4.0 * (m + d.params.at("J") / (c * c)) + d.params.at("J2");
    const double S = R * R / 4.0 * (m - d.params.at("J") / (c * c));
    const double U = R * R * R / (4.0 * c * c) * d.params.at("m0") * d.params.at("l");

    double worst_jk = 0.0, worst_ode = 0.0, worst_push = 0.0, worst_metric = 0.0;
    Mat Gbar = red.Lbar.metric->G(Vec::Zero(2));
    worst_metric = std::max(std::abs(Gbar(0, 0) - P),
                            std::max(std::abs(Gbar(0, 1) - S), std::abs(Gbar(1, 1) - P)));
    for (int i = 0; i < 50; ++i) {
        Vec x = random_vec(rng, 2, -3.0, 3.0);
        Vec v = random_vec(rng, 2, -1.5, 1.5);
        State s{x, v};
        const double w = v[1] - v[0];
        Vec jk = red.jk_form(s);
        worst_jk = std::max(worst_jk, std::abs(jk[0] - U * w * v[1]));
        worst_jk = std::max(worst_jk, std::abs(jk[1] + U * w * v[0]));
        Dynamics dyn = red.reduced_dynamics(s);
        const double den = P * P - S * S;
        worst_ode = std::max(worst_ode, std::abs(dyn.ydot[0] - U * w * (P * v[1] + S * v[0]) / den));
        worst_ode = std::max(worst_ode, std::abs(dyn.ydot[1] + U * w * (P * v[0] + S * v[1]) / den));

        // Anchor-pushforward of the constrained flow equals the forced flow.
        State orig{x, red.h(s)};
        Dynamics up = d.linear->dynamics(orig);
        Mat drho = fd_matrix_directional([&](const Vec& xx) { return d.chart->rho(xx); }, x,
                                         up.xdot, d.chart->fd.step_base);
        Vec vdot = drho * orig.y + d.chart->rho(x) * up.ydot;
        worst_push = std::max(worst_push, (vdot - dyn.ydot).cwiseAbs().maxCoeff());
        worst_push = std::max(worst_push, (up.xdot - v).cwiseAbs().maxCoeff());
    }
    std::ostringstream os;
    os << "P=" << P << " S=" << S << " U=" << U;
    out.push_back(below("chaplygin(constants)", worst_metric, 1e-12, os.str()));
    out.push_back(below("chaplygin(jk-form)", worst_jk, 1e-9));
    out.push_back(below("chaplygin(reduced-ode)", worst_ode, 1e-10));
    out.push_back(below("chaplygin(pushforward)", worst_push, 1e-8));
    return out;
}

} // namespace

// ---------- bracket suite ----------

std::vector<CheckResult> bracket_suite(const SystemDescriptor& ball, uint64_t seed) {
    if (ball.name != "rolling_ball") throw ConfigError("bracket_table is a rolling-ball check");
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    const auto& sys = *ball.nonlinear;
    auto obs = systems::ball_full_observables(ball);
    const double r = ball.params.at("r"), k = ball.params.at("k"), Om = ball.params.at("Omega");
    const double a = k * k / (k * k + r * r);

    std::vector<State> states;
    for (int i = 0; i < 20; ++i) states.push_back(ball.sample(rng));

    auto val = [&](const char* f, const char* g, const State& s) {
        return nh_bracket(sys, obs.at(f), obs.at(g), s);
    };
    double worst_table = 0.0, worst_zero = 0.0;
    for (const State& s : states) {
        double pi1 = obs.at("pi1")(s), pi2 = obs.at("pi2")(s), pi3 = obs.at("pi3")(s);
        worst_table = std::max(worst_table, std::abs(val("x", "pi1", s) - r));
        worst_table = std::max(worst_table, std::abs(val("y", "pi2", s) - r));
        worst_table = std::max(worst_table, std::abs(val("q1", "pi2", s) + 1.0));
        worst_table = std::max(worst_table, std::abs(val("q2", "pi1", s) - 1.0));
        worst_table = std::max(worst_table, std::abs(val("q3", "pi3", s) - 1.0));
        worst_table = std::max(worst_table, std::abs(val("pi1", "pi2", s) - pi3));
        worst_table = std::max(worst_table,
                               std::abs(val("pi2", "pi3", s) - (a * pi1 + a * r * Om * s.x[1])));
        worst_table = std::max(worst_table,
                               std::abs(val("pi3", "pi1", s) - (a * pi2 - a * r * Om * s.x[0])));
        for (auto [f, g] : {std::make_pair("x", "pi2"), std::make_pair("y", "pi1"),
                            std::make_pair("x", "y"), std::make_pair("q3", "pi1")})
            worst_zero = std::max(worst_zero, std::abs(val(f, g, s)));
    }
    out.push_back(below("bracket(full-table)", worst_table, 1e-8));
    out.push_back(below("bracket(table-zeros)", worst_zero, 1e-8));

    // Reduced table downstairs at morphism images.
    const auto& pair = *ball.reduction;
    auto robs = systems::ball_reduced_observables(ball);
    const auto& rsys = *pair.dst_nl;
    double worst_red = 0.0;
    for (const State& s : states) {
        State t = pair.morphism.apply(s);
        double pi1 = robs.at("pi1")(t), pi2 = robs.at("pi2")(t), pi3 = robs.at("pi3")(t);
        auto rv = [&](const char* f, const char* g) {
            return nh_bracket(rsys, robs.at(f), robs.at(g), t);
        };
        worst_red = std::max(worst_red, std::abs(rv("x", "pi1") - r));
        worst_red = std::max(worst_red, std::abs(rv("y", "pi2") - r));
        worst_red = std::max(worst_red, std::abs(rv("pi1", "pi2") - pi3));
        worst_red = std::max(worst_red, std::abs(rv("pi2", "pi3") - (a * pi1 + a * r * Om * t.x[1])));
        worst_red = std::max(worst_red, std::abs(rv("pi3", "pi1") - (a * pi2 - a * r * Om * t.x[0])));
    }
    out.push_back(below("bracket(reduced-table)", worst_red, 1e-8));

    // Axioms: antisymmetry, bilinearity, Leibniz, extension independence.
    double worst_anti = 0.0, worst_leib = 0.0, worst_ext = 0.0;
    Observable prod;
    prod.label = "pi2*x";
    prod.f.n_base = 5;
    prod.f.n_fiber = 5;
    {
        ScalarField p2 = obs.at("pi2").f;
        prod.f.eval = [p2](const Vec& x, const Vec& y) { return p2.eval(x, y) * x[0]; };
    }
    for (const State& s : states) {
        worst_anti = std::max(worst_anti, std::abs(val("pi1", "pi2", s) + val("pi2", "pi1", s)));
        double lhs = nh_bracket(sys, obs.at("pi1"), prod, s);
        double rhs = val("pi1", "pi2", s) * s.x[0] + obs.at("pi2")(s) * val("pi1", "x", s);
        worst_leib = std::max(worst_leib, std::abs(lhs - rhs));
        // Perturb pi1 by a multiple of a constraint function (vanishes on M).
        Observable pert;
        pert.label = "pi1+pi4*pi2";
        pert.f.n_base = 5;
        pert.f.n_fiber = 5;
        ScalarField p1 = obs.at("pi1").f, p4 = obs.at("pi4").f, p2 = obs.at("pi2").f;
        pert.f.eval = [p1, p4, p2](const Vec& x, const Vec& y) {
            return p1.eval(x, y) + p4.eval(x, y) * p2.eval(x, y);
        };
        worst_ext = std::max(worst_ext, std::abs(nh_bracket(sys, pert, obs.at("pi2"), s) -
                                                 val("pi1", "pi2", s)));
    }
    out.push_back(below("bracket(antisymmetry)", worst_anti, 1e-8));
    out.push_back(below("bracket(leibniz)", worst_leib, 1e-7));
    out.push_back(below("bracket(extension-independence)", worst_ext, 1e-8));

    // Evolution law along a trajectory (reactive term present when the table
    // spins) for an honest fiber observable and a base observable.
    IntegratorConfig cfg = ball.integrator;
    cfg.sample_every = 5;
    Trajectory traj = integrate_constrained(sys, ball.default_state, cfg);
    auto e1 = evolution_residual(sys, obs.at("pi3"), traj);
    auto e2 = evolution_residual(sys, obs.at("x"), traj);
    out.push_back(below("bracket(evolution)", std::max(e1.max_residual, e2.max_residual), 1e-6));

    // Jacobi defect: the almost-Poisson bracket fails the Jacobi identity.
    const State& s0 = states.front();
    double j_pi = std::abs(jacobiator(sys, obs.at("pi1"), obs.at("pi2"), obs.at("pi3"), s0));
    double j_mix = std::abs(jacobiator(sys, obs.at("pi2"), obs.at("pi3"), obs.at("q2"), s0));
    out.push_back(above("bracket(jacobiator pi1,pi2,pi3)", j_pi, 1e-3,
                        "identity value is zero by the fundamental table"));
    out.push_back(above("bracket(jacobiator pi2,pi3,q2)", j_mix, 1e-3));
    return out;
}

std::vector<CheckResult> ball_drift_law(const SystemDescriptor& ball, uint64_t /*seed*/) {
    std::vector<CheckResult> out;
    for (double Om : {0.0, 0.5, 1.0}) {
        auto params = ball.params;
        params["Omega"] = Om;
        SystemDescriptor d = systems::build("rolling_ball", params);
        const double r = d.params.at("r"), k = d.params.at("k");
        const double fac = Om * Om * k * k / (k * k + r * r);
        auto monitors = energy_monitor(d);
        IntegratorConfig cfg = d.integrator;
        Trajectory traj = integrate_constrained(*d.nonlinear, d.default_state, cfg, monitors);
        std::vector<double> dE = series_derivative(traj.times, traj.monitors["E"]);
        double worst = 0.0;
        for (size_t i = 2; i + 2 < traj.size(); ++i) {
            const State& s = traj.states[i];
            double law = fac * (s.x[0] * s.y[0] + s.x[1] * s.y[1]);
            worst = std::max(worst, std::abs(dE[i] - law));
            // The instantaneous drift from the multiplier solve agrees too.
            double inst = d.nonlinear->energy_drift(s);
            worst = std::max(worst, std::abs(inst - law));
        }
        std::ostringstream name;
        name << "energy_law(Omega=" << Om << ")";
        out.push_back(below(name.str(), worst, 1e-6));
        if (Om == 0.0) {
            auto rep = monitor_report(traj);
            out.push_back(below("energy_law(Omega=0,conservation)", rep.max_drift["E"], 1e-6));
        }
    }
    return out;
}

std::vector<CheckResult> run_check(const SystemDescriptor& desc, const std::string& check,
                                   uint64_t seed) {
    if (check == "structure_equations") return check_structure(desc, seed);
    if (check == "regularity_sweep") return check_regularity(desc, seed);
    if (check == "route_equivalence") return check_routes(desc, seed);
    if (check == "oracle_match") {
        auto out = check_oracle(desc, seed);
        if (desc.name == "veselova") out.push_back(veselova_multiplier(desc, seed));
        if (desc.name == "suslov") {
            // A tilted constraint axis makes the reduced flow nontrivial.
            auto params = desc.params;
            params["Gamma1"] = 0.6;
            params["Gamma2"] = 0.0;
            params["Gamma3"] = 0.8;
            SystemDescriptor tilted = systems::build("suslov", params);
            tilted.name = "suslov-tilted";
            auto extra = check_oracle(tilted, seed);
            out.insert(out.end(), extra.begin(), extra.end());
        }
        return out;
    }
    if (check == "energy") return check_energy(desc, seed);
    if (check == "noether") return {check_noether(desc, seed)};
    if (check == "momentum") return check_momentum(desc, seed);
    if (check == "reduction") return check_reduction(desc, seed);
    if (check == "chaplygin") return check_chaplygin(desc, seed);
    if (check == "bracket_table") return bracket_suite(desc, seed);
    throw ConfigError("unknown check '" + check + "'");
}

std::vector<CheckResult> run_checks(const SystemDescriptor& desc,
                                    const std::vector<std::string>& checks, uint64_t seed) {
    std::vector<CheckResult> out;
    for (const auto& c : checks) {
        auto part = run_check(desc, c, seed);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::vector<CheckResult> numerics_selfchecks(uint64_t seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);

    // Integrator order on the harmonic oscillator.
    auto chart = std::make_shared<AlgebroidChart>(tangent_bundle_chart(1, {"q"}));
    auto metric = std::make_shared<MetricField>();
    metric->G = [](const Vec&) { return Mat::Identity(1, 1); };
    metric->V.n_base = 1;
    metric->V.eval = [](const Vec& x, const Vec&) { return 0.5 * x[0] * x[0]; };
    LagrangianField L = mechanical_lagrangian(chart, metric);
    State s0{Vec(1), Vec(1)};
    s0.x << 1.0;
    s0.y << 0.0;
    auto exact = [](double t) { return std::cos(t); };
    auto endpoint_error = [&](double h) {
        IntegratorConfig cfg;
        cfg.step = h;
        cfg.horizon = 2.0;
        cfg.sample_every = 1 << 20;
        Trajectory tr = integrate_free(L, s0, cfg);
        return std::abs(tr.back().x[0] - exact(2.0));
    };
    double e1 = endpoint_error(0.02), e2 = endpoint_error(0.01);
    double factor = e1 / e2;
    out.push_back({"rk4_order_factor", factor, 16.0, factor >= 12.0 && factor <= 20.0,
                   "expected within [12,20]"});

    // Complete-lift derivation property on a curved-anchor chart.
    SystemDescriptor ves = systems::build("veselova");
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        State st = ves.sample(rng);
        st.y = random_vec(rng, 3, -1.0, 1.0); // arbitrary fiber point
        Vec a = random_vec(rng, 3, -1.0, 1.0);
        Mat Ms(3, 3), Mm(3, 3);
        for (int j = 0; j < 9; ++j) {
            Ms(j / 3, j % 3) = random_vec(rng, 1, -1.0, 1.0)[0];
            Mm(j / 3, j % 3) = random_vec(rng, 1, -1.0, 1.0)[0];
        }
        SectionField sigma{[Ms, a](const Vec& x) -> Vec { return Ms * x + a; }, nullptr};
        // mu is a linear 1-section; mu-hat(x, y) = (Mm x) . y.
        ScalarField muhat;
        muhat.n_base = 3;
        muhat.n_fiber = 3;
        muhat.eval = [Mm](const Vec& x, const Vec& y) { return (Mm * x).dot(y); };
        ProlongationVector lift = complete_lift(*ves.chart, sigma, st);
        double lhs = anchored_derivative(*ves.chart, lift, muhat, ves.chart->fd);
        // (d_sigma mu)-hat via the bracket-based Lie derivative of mu.
        double rhs = 0.0;
        {
            const Vec& x = st.x;
            Mat rho = ves.chart->rho(x);
            Vec sv = sigma(x);
            for (int al = 0; al < 3; ++al) {
                // (d_sigma mu)_al = rho(sigma) mu_al - mu([sigma, e_al]).
                Vec grad_mu_al = Mm.row(al).transpose();
                double t1 = grad_mu_al.dot(rho * sv);
                SectionField eal = constant_section(Vec(Vec::Unit(3, al)));
                Vec br = bracket_sections(*ves.chart, sigma, eal, x);
                double t2 = (Mm * x).dot(br);
                rhs += (t1 - t2) * st.y[al];
            }
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    out.push_back(below("complete_lift_property", worst, 1e-7));

    // Finite differences against analytic gradients on a transcendental field.
    ScalarField f;
    f.n_base = 2;
    f.n_fiber = 2;
    f.eval = [](const Vec& x, const Vec& y) {
        return std::sin(x[0] * y[1]) + std::exp(0.3 * x[1]) * y[0] * y[0];
    };
    f.analytic_grad = [](const Vec& x, const Vec& y) {
        Vec g(4);
        g[0] = std::cos(x[0] * y[1]) * y[1];
        g[1] = 0.3 * std::exp(0.3 * x[1]) * y[0] * y[0];
        g[2] = 2.0 * std::exp(0.3 * x[1]) * y[0];
        g[3] = std::cos(x[0] * y[1]) * x[0];
        return g;
    };
    std::vector<std::pair<Vec, Vec>> pts;
    for (int i = 0; i < 30; ++i)
        pts.emplace_back(random_vec(rng, 2, -1.0, 1.0), random_vec(rng, 2, -1.0, 1.0));
    out.push_back(below("fd_vs_analytic", validate_scalar_field(f, pts), 1e-5));
    return out;
}

} // namespace verify
} // namespace almech
