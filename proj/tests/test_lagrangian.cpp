#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "almech/simulate.hpp"
#include "almech/systems.hpp"

using namespace almech;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(v.size());
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::mt19937_64 rng(17);

LagrangianField sleigh_lagrangian(double m, double J, double a, double b) {
    auto d = systems::build("chaplygin_sleigh", {{"m", m}, {"J", J}, {"a", a}, {"b", b}});
    return d.L;
}

} // namespace

TEST_CASE("hessian of a mechanical Lagrangian is the inertia matrix") {
    LagrangianField L = sleigh_lagrangian(1.0, 1.0, 1.0, 0.5);
    State st{Vec(0), vec({0.3, -0.2, 0.8})};
    Mat W = hessian_W(L, st);
    Mat expect(3, 3);
    expect << 1.0 + 1.0 * (1.0 + 0.25), -0.5, 1.0, -0.5, 1.0, 0.0, 1.0, 0.0, 1.0;
    CHECK((W - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hessian of a quartic via finite differences") {
    auto chart = std::make_shared<AlgebroidChart>(lie_algebra_chart(Tensor3(1, Mat::Zero(1, 1))));
    LagrangianField L;
    L.chart = chart;
    L.L.n_base = 0;
    L.L.n_fiber = 1;
    L.L.eval = [](const Vec&, const Vec& y) { return std::pow(y[0], 4); };
    State st{Vec(0), vec({1.0})};
    CHECK(hessian_W(L, st)(0, 0) == doctest::Approx(12.0).epsilon(1e-6));
}

TEST_CASE("energy of mechanical and fiber-linear Lagrangians") {
    LagrangianField L = sleigh_lagrangian(1.0, 1.0, 1.0, 0.0);
    State st{Vec(0), vec({1.0, 0.0, 0.0})};
    CHECK(energy(L, st) == doctest::Approx(1.0)); // half * (J + m a^2) * 1

    auto ves = systems::build("veselova", {{"g", 2.0}});
    State vs{vec({0.1, -0.2, 0.9}), vec({0.4, 0.2, 0.0})};
    double expect = 0.5 * vs.y.dot(ves.L.metric->G(vs.x) * vs.y) + 2.0 * vs.x[2];
    CHECK(energy(ves.L, vs) == doctest::Approx(expect).epsilon(1e-12));

    // Fiber-linear Lagrangian: E_L = -L(x, 0).
    auto tb = std::make_shared<AlgebroidChart>(tangent_bundle_chart(1));
    LagrangianField lin;
    lin.chart = tb;
    lin.L.n_base = 1;
    lin.L.n_fiber = 1;
    lin.L.eval = [](const Vec& x, const Vec& y) { return 3.0 * y[0] + std::sin(x[0]); };
    State ls{vec({0.7}), vec({2.0})};
    CHECK(energy(lin, ls) == doctest::Approx(-std::sin(0.7)).epsilon(1e-7));
}

TEST_CASE("cartan two-form blocks") {
    // x-independent mechanical Lagrangian with vanishing structure tensor.
    auto tb = std::make_shared<AlgebroidChart>(tangent_bundle_chart(2));
    auto mf = std::make_shared<MetricField>();
    Mat G(2, 2);
    G << 2.0, 0.3, 0.3, 1.5;
    mf->G = [G](const Vec&) { return G; };
    LagrangianField L = mechanical_lagrangian(tb, mf);
    State st{vec({0.0, 0.0}), vec({0.4, -1.0})};
    Mat om = cartan_two_form(L, st);
    CHECK((om.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((om.topRightCorner(2, 2) - G).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((om.bottomLeftCorner(2, 2) + G).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((om.bottomRightCorner(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((om + om.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sleigh XX block carries the algebra term") {
    auto d = systems::build("chaplygin_sleigh", {{"b", 0.3}});
    State st{Vec(0), vec({0.7, -0.4, 0.0})};
    Mat om = cartan_two_form(d.L, st);
    // omega(X_a, X_b) = dL/dy^g C^g_{ab} with the frame constants
    // C^3_{12} = 1, C^2_{13} = -1.
    Vec p = d.L.grad_y(st);
    Mat M = Mat::Zero(3, 3);
    M(0, 1) = p[2];
    M(1, 0) = -p[2];
    M(0, 2) = -p[1];
    M(2, 0) = p[1];
    CHECK((om.topLeftCorner(3, 3) - M).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("det(omega_L) equals det(W)^2 at random states") {
    auto d = systems::build("veselova");
    for (int i = 0; i < 10; ++i) {
        State st{random_vec(rng, 3, -1, 1), random_vec(rng, 3, -1, 1)};
        Mat om = cartan_two_form(d.L, st);
        Mat W = hessian_W(d.L, st);
        CHECK(om.determinant() ==
              doctest::Approx(W.determinant() * W.determinant()).epsilon(1e-8));
    }
}

TEST_CASE("contraction identity i_{S Gamma} omega = -S*(i_Gamma omega)") {
    auto d = systems::build("veselova");
    for (int i = 0; i < 10; ++i) {
        State st{random_vec(rng, 3, -1, 1), random_vec(rng, 3, -1, 1)};
        Mat om = cartan_two_form(d.L, st);
        Vec z = random_vec(rng, 6, -1, 1);
        Vec Sz(6);
        Sz.head(3).setZero();
        Sz.tail(3) = z.head(3);
        // i_z omega as a coform: (om^T z); S* acts by moving the V-part onto X.
        Vec a = om.transpose() * Sz;
        Vec b = om.transpose() * z;
        Vec Sstar_b(6);
        Sstar_b.head(3) = b.tail(3);
        Sstar_b.tail(3).setZero();
        CHECK((a + Sstar_b).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("free dynamics: Newton, Euler, and the energy differential") {
    // Tangent chart with L = |y|^2/2 - V(x): ydot = -grad V.
    auto tb = std::make_shared<AlgebroidChart>(tangent_bundle_chart(2));
    auto mf = std::make_shared<MetricField>();
    mf->G = [](const Vec&) { return Mat::Identity(2, 2); };
    mf->V.n_base = 2;
    mf->V.eval = [](const Vec& x, const Vec&) { return x[0] * x[0] + 0.5 * x[1]; };
    LagrangianField L = mechanical_lagrangian(tb, mf);
    State st{vec({0.3, -0.2}), vec({1.0, 2.0})};
    Dynamics dyn = free_dynamics(L, st);
    CHECK(dyn.ydot[0] == doctest::Approx(-0.6).epsilon(1e-9));
    CHECK(dyn.ydot[1] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK((dyn.xdot - st.y).cwiseAbs().maxCoeff() < 1e-12);

    // Rigid body: I = diag(1,2,3), w = (1,1,1): I wdot = (I w) x w.
    auto so3 = std::make_shared<AlgebroidChart>(lie_algebra_chart(systems::so3_structure()));
    auto imf = std::make_shared<MetricField>();
    imf->G = [](const Vec&) { return Mat(vec({1.0, 2.0, 3.0}).asDiagonal()); };
    LagrangianField Lb = mechanical_lagrangian(so3, imf);
    Dynamics euler = free_dynamics(Lb, {Vec(0), vec({1.0, 1.0, 1.0})});
    // (I w) x w = (1,2,3) x (1,1,1) = (-1, 2, -1); wdot = (-1, 1, -1/3).
    CHECK(euler.ydot[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(euler.ydot[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(euler.ydot[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-10));

    // The free section solves i_Gamma omega = dE.
    auto ves = systems::build("veselova");
    State vs = ves.sample(rng);
    vs.y = random_vec(rng, 3, -1, 1);
    Mat om = cartan_two_form(ves.L, vs);
    Vec gamma(6);
    gamma.head(3) = vs.y;
    gamma.tail(3) = free_dynamics(ves.L, vs).ydot;
    Vec resid = om.transpose() * gamma - energy_differential(ves.L, vs);
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("free dynamics raises for singular fiber Hessians") {
    auto tb = std::make_shared<AlgebroidChart>(tangent_bundle_chart(2));
    auto mf = std::make_shared<MetricField>();
    Mat G = Mat::Zero(2, 2);
    G(0, 0) = 1.0; // degenerate metric
    mf->G = [G](const Vec&) { return G; };
    LagrangianField L = mechanical_lagrangian(tb, mf);
    CHECK_THROWS_AS(free_dynamics(L, {vec({0.0, 0.0}), vec({1.0, 0.5})}), SingularMatrix);
}

TEST_CASE("mechanical constructor matches the sleigh kinetic form") {
    auto d = systems::build("chaplygin_sleigh", {{"m", 2.0}, {"J", 0.7}, {"a", 0.4}, {"b", 0.1}});
    State st{Vec(0), vec({0.5, -0.3, 0.2})};
    const double m = 2.0, J = 0.7, a = 0.4, b = 0.1;
    const double w = st.y[0], v1 = st.y[1], v2 = st.y[2];
    double expect = 0.5 * ((J + m * (a * a + b * b)) * w * w + m * (v1 * v1 + v2 * v2) -
                           2 * m * b * w * v1 + 2 * a * m * w * v2);
    CHECK(d.L.value(st) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(energy(d.L, st) == doctest::Approx(expect).epsilon(1e-12)); // kinetic only
}

TEST_CASE("Levi-Civita coefficients reduce to Christoffel symbols") {
    // Euclidean metric in a polar-style chart: G = diag(1, u^2).
    auto tb = std::make_shared<AlgebroidChart>(tangent_bundle_chart(2));
    MetricField mf;
    mf.G = [](const Vec& x) {
        Mat G = Mat::Identity(2, 2);
        G(1, 1) = x[0] * x[0];
        return G;
    };
    Vec x0 = vec({1.3, 0.4});
    Tensor3 Gm = levi_civita_coeffs(*tb, mf, x0);
    CHECK(Gm[0](1, 1) == doctest::Approx(-1.3).epsilon(1e-8));        // G^u_{phi phi} = -u
    CHECK(Gm[1](0, 1) == doctest::Approx(1.0 / 1.3).epsilon(1e-8));   // G^phi_{u phi} = 1/u
    CHECK(Gm[1](1, 0) == doctest::Approx(1.0 / 1.3).epsilon(1e-8));
    CHECK(std::abs(Gm[0](0, 0)) < 1e-8);

    // Constant metric with vanishing structure tensor: all coefficients zero.
    MetricField flat;
    flat.G = [](const Vec&) { return Mat::Identity(2, 2); };
    Tensor3 Z = levi_civita_coeffs(*tb, flat, x0);
    for (const Mat& layer : Z) CHECK(layer.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("geodesic spray agrees with potential-free free dynamics") {
    auto ves = systems::build("veselova");
    Tensor3 Gm = levi_civita_coeffs(*ves.chart, *ves.L.metric, vec({0.2, -0.5, 0.8}));
    State st{vec({0.2, -0.5, 0.8}), random_vec(rng, 3, -1, 1)};
    Vec spray = connection_spray(Gm, st.y);
    Vec fd = free_dynamics(ves.L, st).ydot;
    CHECK((spray - fd).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("energy is conserved along free flows of every built-in system") {
    for (const auto& name : {"suslov", "chaplygin_sleigh", "veselova", "mobile_robot"}) {
        auto d = systems::build(name);
        IntegratorConfig cfg;
        cfg.horizon = 10.0;
        cfg.sample_every = 50;
        const LagrangianField* L = &d.L;
        std::map<std::string, MonitorFn> mons{
            {"E", [L](double, const State& s) { return energy(*L, s); }}};
        State start = d.default_state;
        Trajectory tr = integrate_free(d.L, start, cfg, mons);
        CHECK(monitor_report(tr).max_drift["E"] < 1e-6);
    }
}
