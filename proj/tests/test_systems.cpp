#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "almech/systems.hpp"

using namespace almech;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(v.size());
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::mt19937_64 rng(61);

} // namespace

TEST_CASE("builders validate names and parameters") {
    CHECK(systems::system_names().size() == 5);
    CHECK(systems::known_system("veselova"));
    CHECK(!systems::known_system("pendulum"));
    CHECK_THROWS_AS(systems::build("pendulum"), InvalidParameters);
    CHECK_THROWS_AS(systems::build("chaplygin_sleigh", {{"mass", 1.0}}), InvalidParameters);
    CHECK_THROWS_AS(systems::build("chaplygin_sleigh", {{"m", -1.0}}), InvalidParameters);
    CHECK_THROWS_AS(systems::build("suslov", {{"Gamma1", 0.0}, {"Gamma3", 0.0}}),
                    InvalidParameters);
    CHECK_THROWS_AS(systems::build("mobile_robot", {{"l", 5.0}}), InvalidParameters);
}

TEST_CASE("default states satisfy their constraints") {
    for (const auto& name : systems::system_names()) {
        auto d = systems::build(name);
        if (d.is_linear()) {
            State ad = d.linear->to_adapted(d.default_state);
            for (int A = d.linear->r(); A < d.linear->m(); ++A)
                CHECK(std::abs(ad.y[A]) < 1e-12);
        } else {
            CHECK(d.nonlinear->phi_values(d.default_state).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("sleigh oracle at the worked point") {
    auto d = systems::build("chaplygin_sleigh");
    Dynamics dyn = systems::oracle_dynamics(d, {Vec(0), vec({1.0, 0.0, 0.0})});
    CHECK(dyn.ydot[0] == doctest::Approx(0.0));
    CHECK(dyn.ydot[1] == doctest::Approx(1.0));
    CHECK(dyn.ydot[2] == doctest::Approx(0.0));
}

TEST_CASE("oracle rejects off-constraint states") {
    auto d = systems::build("chaplygin_sleigh");
    CHECK_THROWS_AS(systems::oracle_dynamics(d, {Vec(0), vec({1.0, 0.0, 0.5})}), OffConstraint);
    auto ball = systems::build("rolling_ball");
    State off = ball.default_state;
    off.y[2] += 0.3;
    CHECK_THROWS_AS(systems::oracle_dynamics(ball, off), OffConstraint);
}

TEST_CASE("robot oracle has straight-line rolling as a fixed regime") {
    auto d = systems::build("mobile_robot");
    State ad{vec({0.1, 0.2}), Vec(Vec::Zero(5))};
    ad.y[0] = 0.8;
    ad.y[1] = 0.8;
    State s = d.linear->from_adapted(ad);
    Dynamics dyn = systems::oracle_dynamics(d, s);
    CHECK(dyn.ydot.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("sleigh lateral velocity is identically zero along the flow") {
    auto d = systems::build("chaplygin_sleigh");
    IntegratorConfig cfg = d.integrator;
    cfg.sample_every = 200;
    Trajectory tr = integrate_constrained(*d.linear, d.default_state, cfg);
    for (const State& s : tr.states) CHECK(std::abs(s.y[2]) < 1e-12);
}

TEST_CASE("engine matches oracles pointwise across systems") {
    for (const auto& name : systems::system_names()) {
        auto d = systems::build(name);
        double worst = 0.0;
        for (int i = 0; i < 30; ++i) {
            State s = d.sample(rng);
            Dynamics engine = d.is_linear() ? d.linear->dynamics(s) : d.nonlinear->dynamics(s);
            Dynamics oracle = systems::oracle_dynamics(d, s);
            worst = std::max(worst, (engine.ydot - oracle.ydot).cwiseAbs().maxCoeff());
            if (s.x.size() > 0)
                worst = std::max(worst, (engine.xdot - oracle.xdot).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("veselova invariants along the constrained flow") {
    auto d = systems::build("veselova");
    IntegratorConfig cfg = d.integrator;
    cfg.sample_every = 100;
    std::map<std::string, MonitorFn> mons{
        {"constraint", [](double, const State& s) { return s.x.dot(s.y); }},
        {"sphere", [](double, const State& s) { return s.x.norm() - 1.0; }}};
    Trajectory tr = integrate_constrained(*d.linear, d.default_state, cfg, mons);
    auto rep = monitor_report(tr);
    CHECK(rep.max_abs["constraint"] < 1e-7);
    CHECK(rep.max_abs["sphere"] < 1e-7);
}

TEST_CASE("veselova multiplier matches the closed form") {
    auto d = systems::build("veselova", {{"g", 1.5}});
    Mat I = d.L.metric->G(vec({0, 0, 1}));
    Mat Iinv = I.inverse();
    for (int i = 0; i < 10; ++i) {
        State s = d.sample(rng);
        auto ld = d.linear->solve_ld(s);
        Vec Iw = I * s.y;
        Vec f = vec({Iw[1] * s.y[2] - Iw[2] * s.y[1], Iw[2] * s.y[0] - Iw[0] * s.y[2],
                     Iw[0] * s.y[1] - Iw[1] * s.y[0]});
        Vec dV = vec({0.0, 0.0, 1.5});
        f += vec({s.x[1] * dV[2] - s.x[2] * dV[1], s.x[2] * dV[0] - s.x[0] * dV[2],
                  s.x[0] * dV[1] - s.x[1] * dV[0]});
        double lambda = -f.dot(Iinv * s.x) / s.x.dot(Iinv * s.x);
        CHECK(ld.lambda[0] == doctest::Approx(-lambda).epsilon(1e-8));
    }
}

TEST_CASE("ball energy drift follows the squared-spin law across parameters") {
    for (double Om : {0.0, 0.5, 1.0}) {
        auto d = systems::build("rolling_ball", {{"Omega", Om}});
        const double r = d.params.at("r"), k = d.params.at("k");
        const double fac = Om * Om * k * k / (k * k + r * r);
        State s = d.sample(rng);
        CHECK(d.nonlinear->energy_drift(s) ==
              doctest::Approx(fac * (s.x[0] * s.y[0] + s.x[1] * s.y[1])).epsilon(1e-10));
    }
}

TEST_CASE("descriptor sampling respects chart validity boxes") {
    auto ball = systems::build("rolling_ball");
    for (int i = 0; i < 50; ++i) {
        State s = ball.sample(rng);
        CHECK(std::sin(s.x[2]) > 0.1);
        CHECK(ball.nonlinear->phi_values(s).cwiseAbs().maxCoeff() < 1e-12);
    }
    auto ves = systems::build("veselova");
    for (int i = 0; i < 50; ++i) {
        State s = ves.sample(rng);
        CHECK(std::abs(s.x.norm() - 1.0) < 1e-12);
        Mat B = ves.linear->frame().B(s.x);
        CHECK(std::abs(B.determinant()) > 1e-3);
    }
}

TEST_CASE("veselova with a uniform potential still conserves energy") {
    auto d = systems::build("veselova", {{"g", 1.2}});
    IntegratorConfig cfg = d.integrator;
    cfg.sample_every = 100;
    const LagrangianField* L = &d.L;
    std::map<std::string, MonitorFn> mons{
        {"E", [L](double, const State& s) { return energy(*L, s); }}};
    Trajectory tr = integrate_constrained(*d.linear, d.default_state, cfg, mons);
    CHECK(monitor_report(tr).max_drift["E"] < 1e-6);

    // And the engine still tracks the closed-form equations.
    std::mt19937_64 local_rng(5);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        State s = d.sample(local_rng);
        Dynamics engine = d.linear->dynamics(s);
        Dynamics oracle = systems::oracle_dynamics(d, s);
        worst = std::max(worst, (engine.ydot - oracle.ydot).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("oracles are deterministic") {
    auto d = systems::build("mobile_robot");
    State s = d.sample(rng);
    Dynamics a = systems::oracle_dynamics(d, s);
    Dynamics b = systems::oracle_dynamics(d, s);
    CHECK((a.ydot - b.ydot).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all seven built-in charts satisfy the structure equations") {
    auto charts = systems::all_charts();
    CHECK(charts.size() == 7);
    for (auto& nc : charts) {
        std::vector<Vec> pts;
        for (int i = 0; i < 25; ++i) pts.push_back(nc.sample_point(rng));
        auto rep = check_structure_equations(*nc.chart, pts, 1e-6);
        INFO(nc.name);
        CHECK(rep.pass);
    }
}
