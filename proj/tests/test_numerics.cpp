#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "almech/numerics.hpp"

using namespace almech;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(v.size());
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

} // namespace

TEST_CASE("fd_gradient on simple fields") {
    ScalarField f;
    f.n_base = 1;
    f.n_fiber = 1;
    f.eval = [](const Vec&, const Vec& y) { return y[0] * y[0]; };
    Vec g = fd_gradient(f, vec({0.0}), vec({3.0}));
    CHECK(g[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(g[1] == doctest::Approx(6.0).epsilon(1e-8));

    ScalarField c;
    c.n_base = 2;
    c.n_fiber = 2;
    c.eval = [](const Vec&, const Vec&) { return 4.2; };
    Vec gc = fd_gradient(c, vec({0.3, -0.4}), vec({1.0, 2.0}));
    CHECK(gc.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("fd_gradient matches the analytic derivative of sin(x1)y1") {
    ScalarField f;
    f.n_base = 2;
    f.n_fiber = 2;
    f.eval = [](const Vec& x, const Vec& y) { return std::sin(x[0]) * y[0]; };
    // d/dx1 = cos(0) * 2 = 2; all other entries vanish at x1 = 0.
    Vec g = fd_gradient(f, vec({0.0, 0.7}), vec({2.0, -1.0}));
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(g[1]) < 1e-8);
    CHECK(std::abs(g[2]) < 1e-8);
    CHECK(std::abs(g[3]) < 1e-8);
}

TEST_CASE("central differences are exact for quadratics") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.3, 0.3);
    for (int rep = 0; rep < 10; ++rep) {
        Mat A(4, 4);
        Vec b(4);
        for (int i = 0; i < 4; ++i) {
            b[i] = dist(rng);
            for (int j = 0; j < 4; ++j) A(i, j) = dist(rng);
        }
        ScalarField f;
        f.n_base = 2;
        f.n_fiber = 2;
        f.eval = [A, b](const Vec& x, const Vec& y) {
            Vec z(4);
            z << x, y;
            return 0.5 * z.dot(A * z) + b.dot(z);
        };
        Vec x = vec({dist(rng), dist(rng)});
        Vec y = vec({dist(rng), dist(rng)});
        Vec z(4);
        z << x, y;
        Vec expect = 0.5 * (A + A.transpose()) * z + b;
        Vec g = fd_gradient(f, x, y);
        CHECK((g - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fd_gradient raises on non-finite stencils") {
    ScalarField f;
    f.n_base = 0;
    f.n_fiber = 1;
    f.eval = [](const Vec&, const Vec& y) { return std::sqrt(y[0]); };
    CHECK_THROWS_AS(fd_gradient(f, Vec(0), vec({0.0})), NonFiniteEvaluation);
}

TEST_CASE("central4 keeps high-order accuracy") {
    ScalarField f;
    f.n_base = 0;
    f.n_fiber = 1;
    f.eval = [](const Vec&, const Vec& y) { return std::exp(y[0]); };
    FDConfig cfg;
    cfg.scheme = FDScheme::central4;
    cfg.step_fiber = 1e-3;
    Vec g = fd_gradient(f, Vec(0), vec({0.4}), cfg);
    CHECK(g[0] == doctest::Approx(std::exp(0.4)).epsilon(1e-11));
}

TEST_CASE("solve_dense basic and residual contracts") {
    CHECK((solve_dense(Mat::Identity(3, 3), vec({1, 2, 3})) - vec({1, 2, 3})).norm() < 1e-14);

    Mat A(2, 2);
    A << 2, 0, 0, 4;
    Vec z = solve_dense(A, vec({2, 8}));
    CHECK(z[0] == doctest::Approx(1.0));
    CHECK(z[1] == doctest::Approx(2.0));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat R(5, 5);
    for (int i = 0; i < 25; ++i) R(i / 5, i % 5) = dist(rng);
    R += 5.0 * Mat::Identity(5, 5); // well conditioned
    Vec b(5);
    for (int i = 0; i < 5; ++i) b[i] = dist(rng);
    Vec x = solve_dense(R, b);
    CHECK((R * x - b).norm() <= 1e-10 * (1.0 + b.norm()));

    Mat S(2, 2);
    S << 1, 1, 1, 1;
    CHECK_THROWS_AS(solve_dense(S, vec({1, 2})), SingularMatrix);
}

TEST_CASE("solve then multiply is the identity on random systems") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Mat A(4, 4);
        for (int i = 0; i < 16; ++i) A(i / 4, i % 4) = dist(rng);
        A += 4.0 * Mat::Identity(4, 4);
        Vec x0(4);
        for (int i = 0; i < 4; ++i) x0[i] = dist(rng);
        Vec x = solve_dense(A, Vec(A * x0));
        CHECK((x - x0).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("nullspace dimensions and directions") {
    CHECK(nullspace(Mat::Identity(2, 2)).cols() == 0);

    Mat A(1, 3);
    A << 1, 0, 0;
    Mat N = nullspace(A);
    REQUIRE(N.cols() == 2);
    CHECK((A * N).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((N.transpose() * N - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    Mat B(1, 2);
    B << 1, 1;
    Mat NB = nullspace(B);
    REQUIRE(NB.cols() == 1);
    CHECK(NB.col(0).norm() == doctest::Approx(1.0));
    CHECK(std::abs(NB(0, 0) + NB(1, 0)) < 1e-12); // +-(1,-1)/sqrt(2)
    CHECK((B * NB).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("validate_scalar_field accepts a consistent analytic gradient") {
    ScalarField f;
    f.n_base = 1;
    f.n_fiber = 1;
    f.eval = [](const Vec& x, const Vec& y) { return std::sin(x[0]) + y[0] * y[0]; };
    f.analytic_grad = [](const Vec& x, const Vec& y) {
        Vec g(2);
        g << std::cos(x[0]), 2.0 * y[0];
        return g;
    };
    std::vector<std::pair<Vec, Vec>> pts = {{vec({0.2}), vec({0.5})}, {vec({-1.0}), vec({2.0})}};
    CHECK(validate_scalar_field(f, pts) < 1e-5);
}

TEST_CASE("hessian blocks reach second-difference accuracy") {
    auto f = [](const Vec& u, const Vec& v) {
        return std::sin(u[0]) * v[0] + u[1] * u[1] * v[1] + std::exp(0.2 * v[0] * v[1]);
    };
    Vec u = vec({0.3, -0.5});
    Vec v = vec({0.8, 0.4});
    Mat H = fd_hessian_block(f, u, v, false, false, 1e-3, 1e-3);
    CHECK(H(0, 0) == doctest::Approx(std::cos(0.3)).epsilon(1e-7));
    CHECK(H(1, 1) == doctest::Approx(-1.0).epsilon(1e-7)); // 2 u1 = -1
}
