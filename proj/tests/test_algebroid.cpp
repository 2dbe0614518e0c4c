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

std::mt19937_64 rng(41);

} // namespace

TEST_CASE("structure equations vanish identically on a tangent-bundle chart") {
    AlgebroidChart ch = tangent_bundle_chart(3);
    std::vector<Vec> pts = {vec({0.1, -0.2, 0.5}), vec({1.0, 2.0, -1.0})};
    auto rep = check_structure_equations(ch, pts, 1e-12);
    CHECK(rep.pass);
    CHECK(rep.max_residual_anchor == 0.0);
    CHECK(rep.max_residual_jacobi == 0.0);
}

TEST_CASE("cross-product constants satisfy the Jacobi identity over a point") {
    AlgebroidChart so3 = lie_algebra_chart(systems::so3_structure());
    auto rep = check_structure_equations(so3, {Vec(0)}, 1e-12);
    CHECK(rep.pass);
    CHECK(rep.max_residual_jacobi <= 1e-12);
}

TEST_CASE("rolling-ball chart passes the structure equations at random points") {
    auto ball = systems::build("rolling_ball");
    std::vector<Vec> pts;
    for (auto& nc : systems::all_charts())
        if (nc.name == "ball_full")
            for (int i = 0; i < 100; ++i) pts.push_back(nc.sample_point(rng));
    auto rep = check_structure_equations(*ball.chart, pts, 1e-6);
    CHECK(rep.pass);
}

TEST_CASE("a broken structure tensor fails the checks") {
    AlgebroidChart bad = lie_algebra_chart(systems::so3_structure());
    auto good = bad.structure;
    bad.structure = [good](const Vec& x) {
        Tensor3 C = good(x);
        C[0](1, 2) += 0.1; // breaks antisymmetry and Jacobi
        return C;
    };
    auto rep = check_structure_equations(bad, {Vec(0)}, 1e-8);
    CHECK(!rep.pass);
}

TEST_CASE("bracket of constant sections on a Lie algebra is the structure contraction") {
    AlgebroidChart so3 = lie_algebra_chart(systems::so3_structure());
    Vec a = vec({1.0, 2.0, -0.5});
    Vec b = vec({0.3, -1.0, 2.0});
    Vec br = bracket_sections(so3, constant_section(a), constant_section(b), Vec(0));
    // Cross product for these constants.
    Vec expect = vec({a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                      a[0] * b[1] - a[1] * b[0]});
    CHECK((br - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tangent-bundle bracket equals the classical commutator of vector fields") {
    AlgebroidChart ch = tangent_bundle_chart(2);
    SectionField X{[](const Vec& x) { return vec({x[0] * x[1], std::sin(x[0])}); }, nullptr};
    SectionField Y{[](const Vec& x) { return vec({x[1], x[0] * x[0]}); }, nullptr};
    Vec x0 = vec({0.4, -0.7});
    Vec br = bracket_sections(ch, X, Y, x0);
    // Classical [X,Y] = JY X - JX Y from the analytic Jacobians.
    Mat JX(2, 2), JY(2, 2);
    JX << x0[1], x0[0], std::cos(x0[0]), 0.0;
    JY << 0.0, 1.0, 2.0 * x0[0], 0.0;
    Vec expect = JY * X(x0) - JX * Y(x0);
    CHECK((br - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bracket antisymmetry and Leibniz compatibility at random points") {
    auto ves = systems::build("veselova");
    const AlgebroidChart& ch = *ves.chart;
    for (int rep = 0; rep < 20; ++rep) {
        Vec x = random_vec(rng, 3, -1.0, 1.0);
        Mat Ms(3, 3), Mh(3, 3);
        for (int i = 0; i < 9; ++i) {
            Ms(i / 3, i % 3) = random_vec(rng, 1, -1, 1)[0];
            Mh(i / 3, i % 3) = random_vec(rng, 1, -1, 1)[0];
        }
        Vec a = random_vec(rng, 3, -1, 1), b = random_vec(rng, 3, -1, 1);
        SectionField s{[Ms, a](const Vec& xx) -> Vec { return Ms * xx + a; }, nullptr};
        SectionField e{[Mh, b](const Vec& xx) -> Vec { return Mh * xx + b; }, nullptr};

        Vec anti = bracket_sections(ch, s, e, x) + bracket_sections(ch, e, s, x);
        CHECK(anti.cwiseAbs().maxCoeff() < 1e-9);

        // [sigma, f eta] = f [sigma, eta] + (rho(sigma) f) eta
        Vec c = random_vec(rng, 3, -1, 1);
        auto fval = [c](const Vec& xx) { return std::sin(c.dot(xx)); };
        SectionField fe{[Mh, b, fval](const Vec& xx) -> Vec { return fval(xx) * (Mh * xx + b); },
                        nullptr};
        Vec lhs = bracket_sections(ch, s, fe, x);
        Vec grad_f = c * std::cos(c.dot(x));
        double rho_sigma_f = grad_f.dot(ch.rho(x) * s(x));
        Vec rhs = fval(x) * bracket_sections(ch, s, e, x) + rho_sigma_f * e(x);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("differential of base functions") {
    AlgebroidChart tb = tangent_bundle_chart(2);
    ScalarField f;
    f.n_base = 2;
    f.n_fiber = 0;
    f.eval = [](const Vec& x, const Vec&) { return x[0] * x[0] + 3.0 * x[1]; };
    Vec d = differential_of_function(tb, f, vec({0.5, 1.0}));
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d[1] == doctest::Approx(3.0).epsilon(1e-9));

    ScalarField c;
    c.n_base = 2;
    c.n_fiber = 0;
    c.eval = [](const Vec&, const Vec&) { return 7.0; };
    CHECK(differential_of_function(tb, c, vec({0.5, 1.0})).cwiseAbs().maxCoeff() <
          1e-12);

    AlgebroidChart so3 = lie_algebra_chart(systems::so3_structure());
    ScalarField g;
    g.n_base = 0;
    g.n_fiber = 0;
    g.eval = [](const Vec&, const Vec&) { return 1.0; };
    CHECK(differential_of_function(so3, g, Vec(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("complete lift on a Lie algebra chart is minus the structure contraction") {
    AlgebroidChart so3 = lie_algebra_chart(systems::so3_structure());
    Vec sv = vec({0.5, -1.0, 2.0});
    State st{Vec(0), vec({1.0, 0.2, -0.4})};
    ProlongationVector lift = complete_lift(so3, constant_section(sv), st);
    CHECK((lift.comp_X - sv).cwiseAbs().maxCoeff() == 0.0);
    Vec expect = -so3.structure_contract(Vec(0), sv, st.y);
    CHECK((lift.comp_V - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("complete lift reduces to the classical one on a tangent chart") {
    AlgebroidChart tb = tangent_bundle_chart(2);
    Mat A(2, 2);
    A << 0.3, -1.2, 0.7, 0.1;
    SectionField X{[A](const Vec& x) -> Vec { return A * x; }, nullptr};
    State st{vec({0.4, 0.9}), vec({-0.3, 0.8})};
    ProlongationVector lift = complete_lift(tb, X, st);
    CHECK((lift.comp_X - A * st.x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lift.comp_V - A * st.y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("complete lift is linear in the fiber point") {
    auto ves = systems::build("veselova");
    SectionField s{[](const Vec& x) { return vec({x[1], -x[0], 0.3}); }, nullptr};
    State st{vec({0.2, 0.4, 0.8}), Vec(Vec::Zero(3))};
    ProlongationVector lift = complete_lift(*ves.chart, s, st);
    CHECK(lift.comp_V.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("derivation property pins the complete-lift sign") {
    // d_{sigma^C} mu-hat = (d_sigma mu)-hat for linear 1-sections mu; with the
    // opposite sign convention on the structure term the identity fails.
    auto ves = systems::build("veselova");
    const AlgebroidChart& ch = *ves.chart;
    double worst_good = 0.0, best_bad = 1e30;
    for (int rep = 0; rep < 10; ++rep) {
        State st{random_vec(rng, 3, -1, 1), random_vec(rng, 3, -1, 1)};
        Mat Ms(3, 3), Mm(3, 3);
        for (int i = 0; i < 9; ++i) {
            Ms(i / 3, i % 3) = random_vec(rng, 1, -1, 1)[0];
            Mm(i / 3, i % 3) = random_vec(rng, 1, -1, 1)[0];
        }
        SectionField sigma{[Ms](const Vec& x) -> Vec { return Ms * x; }, nullptr};
        ScalarField muhat;
        muhat.n_base = 3;
        muhat.n_fiber = 3;
        muhat.eval = [Mm](const Vec& x, const Vec& y) { return (Mm * x).dot(y); };

        auto rhs_value = [&]() {
            double rhs = 0.0;
            for (int al = 0; al < 3; ++al) {
                Vec grad_mu_al = Mm.row(al).transpose();
                double t1 = grad_mu_al.dot(ch.rho(st.x) * sigma(st.x));
                SectionField eal = constant_section(Vec(Vec::Unit(3, al)));
                double t2 = (Mm * st.x).dot(bracket_sections(ch, sigma, eal, st.x));
                rhs += (t1 - t2) * st.y[al];
            }
            return rhs;
        }();

        ProlongationVector good = complete_lift(ch, sigma, st);
        double lhs = anchored_derivative(ch, good, muhat, ch.fd);
        worst_good = std::max(worst_good, std::abs(lhs - rhs_value));

        ProlongationVector bad = good;
        bad.comp_V += 2.0 * ch.structure_contract(st.x, sigma(st.x), st.y); // flipped sign
        double lhs_bad = anchored_derivative(ch, bad, muhat, ch.fd);
        best_bad = std::min(best_bad, std::abs(lhs_bad - rhs_value));
    }
    CHECK(worst_good < 1e-7);
    CHECK(best_bad > 1e-4); // negative control
}

TEST_CASE("vertical lift and endomorphism behave as expected") {
    State st{vec({0.1}), vec({2.0})};
    ProlongationVector z = vertical_lift(vec({0.0}), st);
    CHECK(z.comp_V.cwiseAbs().maxCoeff() == 0.0);
    ProlongationVector e1 = vertical_lift(vec({1.0}), st);
    CHECK(e1.comp_X.cwiseAbs().maxCoeff() == 0.0);
    CHECK(e1.comp_V[0] == 1.0);
    // Linearity in the lifted fiber vector.
    ProlongationVector sum = vertical_lift(vec({3.5}), st);
    CHECK(sum.comp_V[0] == doctest::Approx(3.5));

    ProlongationVector w{st, vec({0.7}), vec({-0.2})};
    ProlongationVector Sw = vertical_endomorphism(w);
    CHECK(Sw.comp_X.cwiseAbs().maxCoeff() == 0.0);
    CHECK(Sw.comp_V[0] == doctest::Approx(0.7));
    ProlongationVector SSw = vertical_endomorphism(Sw);
    CHECK(SSw.comp_V.cwiseAbs().maxCoeff() == 0.0);

    CHECK(liouville(st).comp_V[0] == doctest::Approx(2.0));
}
