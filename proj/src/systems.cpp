#include "almech/systems.hpp"

#include <cmath>

namespace almech {
namespace systems {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

Mat hat(const Vec& g) {
    Mat H(3, 3);
    H << 0, -g[2], g[1], g[2], 0, -g[0], -g[1], g[0], 0;
    return H;
}

Vec cross(const Vec& a, const Vec& b) {
    return vec3(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}

std::map<std::string, double> merge_params(std::map<std::string, double> defaults,
                                           const std::map<std::string, double>& overrides,
                                           const std::string& sys) {
    for (const auto& [k, v] : overrides) {
        if (!defaults.count(k))
            throw InvalidParameters("unknown parameter '" + k + "' for system " + sys);
        defaults[k] = v;
    }
    return defaults;
}

void require_positive(const std::map<std::string, double>& p, const std::vector<std::string>& keys) {
    for (const auto& k : keys)
        if (!(p.at(k) > 0.0)) throw InvalidParameters("parameter '" + k + "' must be positive");
}

ScalarField uniform_potential(int n, double g, const Vec& chi) {
    ScalarField V;
    V.n_base = n;
    V.n_fiber = 0;
    V.eval = [g, chi](const Vec& x, const Vec&) { return g * chi.dot(x); };
    V.analytic_grad = [g, chi, n](const Vec&, const Vec&) {
        Vec out = Vec::Zero(n);
        out.head(chi.size()) = g * chi;
        return out;
    };
    return V;
}

} // namespace

Tensor3 so3_structure() {
    Tensor3 C(3, Mat::Zero(3, 3));
    C[2](0, 1) = 1;  C[2](1, 0) = -1; // [e1,e2] = e3
    C[1](2, 0) = 1;  C[1](0, 2) = -1; // [e3,e1] = e2
    C[0](1, 2) = 1;  C[0](2, 1) = -1; // [e2,e3] = e1
    return C;
}

Tensor3 so3_body_frame_structure() {
    // Brackets of the moving frame dq1, dq2, dq3 on the rotation group:
    // [e2,e1] = e3, [e1,e3] = e2, [e3,e2] = e1.
    Tensor3 C(3, Mat::Zero(3, 3));
    C[2](1, 0) = 1;  C[2](0, 1) = -1;
    C[1](0, 2) = 1;  C[1](2, 0) = -1;
    C[0](2, 1) = 1;  C[0](1, 2) = -1;
    return C;
}

Tensor3 se2_structure_sleigh() {
    // Frame order (omega, v1, v2): [e1,e2] = e3, [e1,e3] = -e2, [e2,e3] = 0.
    Tensor3 C(3, Mat::Zero(3, 3));
    C[2](0, 1) = 1;  C[2](1, 0) = -1;
    C[1](0, 2) = -1; C[1](2, 0) = 1;
    return C;
}

namespace {

// Left-invariant frame of the planar Euclidean group in coordinates
// (theta, x, y), frame order (rotation, body-x, body-y).
std::shared_ptr<AlgebroidChart> se2_group_chart() {
    auto ch = std::make_shared<AlgebroidChart>();
    ch->n = 3;
    ch->m = 3;
    ch->x_labels = {"theta", "x", "y"};
    ch->y_labels = {"omega", "v1", "v2"};
    ch->anchor = [](const Vec& x) {
        Mat r = Mat::Zero(3, 3);
        double c = std::cos(x[0]), s = std::sin(x[0]);
        r(0, 0) = 1.0;
        r(1, 1) = c;  r(2, 1) = s;
        r(1, 2) = -s; r(2, 2) = c;
        return r;
    };
    ch->structure = [C = se2_structure_sleigh()](const Vec&) { return C; };
    return ch;
}

// Moving-frame chart of the rotation group in Euler angles (theta, phi, psi).
// Columns are the body angular-velocity frame fields dq1, dq2, dq3.
Mat euler_body_frame_anchor(double th, double ps) {
    Mat r = Mat::Zero(3, 3);
    double c = std::cos(ps), s = std::sin(ps);
    double st = std::sin(th), ct = std::cos(th);
    r(0, 0) = c;          r(0, 1) = s;
    r(1, 0) = s / st;     r(1, 1) = -c / st;
    r(2, 0) = -s * ct / st; r(2, 1) = c * ct / st;
    r(2, 2) = 1.0;
    return r;
}

std::shared_ptr<MetricField> constant_metric(const Mat& G) {
    auto mf = std::make_shared<MetricField>();
    mf->G = [G](const Vec&) { return G; };
    return mf;
}

Mat sleigh_inertia(double m, double J, double a, double b) {
    Mat I(3, 3);
    I << J + m * (a * a + b * b), -b * m, a * m,
        -b * m, m, 0,
        a * m, 0, m;
    return I;
}

// ---------------- Suslov ----------------

SystemDescriptor build_suslov(const std::map<std::string, double>& overrides, const FDConfig& fd) {
    SystemDescriptor d;
    d.name = "suslov";
    d.params = merge_params({{"I1", 2.0}, {"I2", 3.0}, {"I3", 4.0},
                             {"Gamma1", 0.0}, {"Gamma2", 0.0}, {"Gamma3", 1.0}},
                            overrides, d.name);
    require_positive(d.params, {"I1", "I2", "I3"});
    Vec Gamma = vec3(d.params["Gamma1"], d.params["Gamma2"], d.params["Gamma3"]);
    if (Gamma.norm() < 1e-12) throw InvalidParameters("suslov: Gamma must be nonzero");
    Gamma.normalize();
    Mat I = Vec(vec3(d.params["I1"], d.params["I2"], d.params["I3"])).asDiagonal();

    auto chart = std::make_shared<AlgebroidChart>(
        lie_algebra_chart(so3_structure(), {"w1", "w2", "w3"}));
    chart->fd = fd;
    d.chart = chart;
    d.L = mechanical_lagrangian(chart, constant_metric(I), fd);

    // Frame: two orthonormal spanning vectors of Gamma-perp, then Gamma.
    Vec u = std::abs(Gamma[0]) < 0.9 ? vec3(1, 0, 0) : vec3(0, 1, 0);
    Vec c1 = (u - Gamma.dot(u) * Gamma).normalized();
    Vec c2 = cross(Gamma, c1);
    Mat B(3, 3);
    B.col(0) = c1;
    B.col(1) = c2;
    B.col(2) = Gamma;
    AdaptedFrame frame;
    frame.r = 2;
    frame.B = [B](const Vec&) { return B; };
    d.linear = std::make_shared<LinearNHSystem>(chart, d.L, frame);

    d.default_state = {Vec(0), 0.8 * c1 + 0.6 * c2};
    d.integrator = {};
    Mat Iinv = I.inverse();
    // Multiplier form with the closed-form multiplier; for a principal-axis
    // Gamma it coincides with the compact display I^{-1}(<Iw,Gamma> w x I^{-1}Gamma).
    d.oracle = [I, Iinv, Gamma](const State& s) -> Dynamics {
        const Vec& w = s.y;
        Vec f = cross(I * w, w);
        double lambda = -f.dot(Iinv * Gamma) / Gamma.dot(Iinv * Gamma);
        Vec ydot = Iinv * (f + lambda * Gamma);
        return {Vec(0), ydot};
    };
    d.sample = [B](std::mt19937_64& rng) -> State {
        Vec c = random_vec(rng, 2, -1.0, 1.0);
        return {Vec(0), Vec(c[0] * B.col(0) + c[1] * B.col(1))};
    };
    d.checks = {"structure_equations", "regularity_sweep", "route_equivalence",
                "energy", "noether", "momentum", "oracle_match"};
    return d;
}

// ---------------- Chaplygin sleigh ----------------

SystemDescriptor build_sleigh(const std::map<std::string, double>& overrides, const FDConfig& fd) {
    SystemDescriptor d;
    d.name = "chaplygin_sleigh";
    d.params = merge_params({{"m", 1.0}, {"J", 1.0}, {"a", 1.0}, {"b", 0.0}}, overrides, d.name);
    require_positive(d.params, {"m", "J"});
    const double m = d.params["m"], J = d.params["J"], a = d.params["a"], b = d.params["b"];
    Mat I = sleigh_inertia(m, J, a, b);

    auto chart = std::make_shared<AlgebroidChart>(
        lie_algebra_chart(se2_structure_sleigh(), {"omega", "v1", "v2"}));
    chart->fd = fd;
    d.chart = chart;
    d.L = mechanical_lagrangian(chart, constant_metric(I), fd);
    d.linear = std::make_shared<LinearNHSystem>(chart, d.L, identity_frame(3, 2));

    d.default_state = {Vec(0), vec3(1.0, 0.0, 0.0)};
    d.integrator = {};
    d.oracle = [m, J, a, b](const State& s) -> Dynamics {
        const double w = s.y[0], v1 = s.y[1];
        const double den = J + m * a * a;
        Vec ydot = vec3(a * m * w * (b * w - v1) / den,
                        a * w * ((J + m * (a * a + b * b)) * w - m * b * v1) / den, 0.0);
        return {Vec(0), ydot};
    };
    d.sample = [](std::mt19937_64& rng) -> State {
        Vec c = random_vec(rng, 2, -1.0, 1.0);
        return {Vec(0), vec3(c[0], c[1], 0.0)};
    };

    // Reduction pair: kinetic-energy system on the Euclidean-group tangent
    // chart, mapped by left trivialization onto the algebra chart.
    auto pair = std::make_shared<ReductionPair>();
    auto full_chart = se2_group_chart();
    full_chart->fd = fd;
    LagrangianField Lfull = mechanical_lagrangian(full_chart, constant_metric(I), fd);
    pair->src_lin = std::make_shared<LinearNHSystem>(full_chart, Lfull, identity_frame(3, 2));
    pair->dst_lin = d.linear;
    pair->morphism.source = full_chart;
    pair->morphism.target = chart;
    pair->morphism.base_map = [](const Vec&) { return Vec(0); };
    pair->morphism.fiber_map = [](const Vec&) { return Mat::Identity(3, 3); };
    pair->src_start = {vec3(0.2, 0.0, 0.0), vec3(1.0, 0.0, 0.0)};
    auto src = pair->src_lin;
    pair->sample_src = [src](std::mt19937_64& rng) -> State {
        Vec x = random_vec(rng, 3, -1.0, 1.0);
        Vec c = random_vec(rng, 2, -1.0, 1.0);
        return {x, vec3(c[0], c[1], 0.0)};
    };
    d.reduction = pair;
    d.checks = {"structure_equations", "regularity_sweep", "route_equivalence",
                "energy", "momentum", "oracle_match", "reduction"};
    return d;
}

// ---------------- Veselova ----------------

SystemDescriptor build_veselova(const std::map<std::string, double>& overrides, const FDConfig& fd) {
    SystemDescriptor d;
    d.name = "veselova";
    d.params = merge_params({{"I1", 1.2}, {"I2", 1.8}, {"I3", 2.5}, {"g", 0.0}}, overrides, d.name);
    require_positive(d.params, {"I1", "I2", "I3"});
    Mat I = Vec(vec3(d.params["I1"], d.params["I2"], d.params["I3"])).asDiagonal();
    const double g = d.params["g"];
    const Vec chi = vec3(0.0, 0.0, 1.0);

    auto chart = std::make_shared<AlgebroidChart>();
    chart->n = 3;
    chart->m = 3;
    chart->x_labels = {"g1", "g2", "g3"};
    chart->y_labels = {"w1", "w2", "w3"};
    chart->anchor = [](const Vec& gamma) { return hat(gamma); };
    chart->structure = [C = so3_structure()](const Vec&) { return C; };
    chart->fd = fd;
    d.chart = chart;

    auto metric = constant_metric(I);
    if (g != 0.0) metric->V = uniform_potential(3, g, chi);
    d.L = mechanical_lagrangian(chart, metric, fd);

    // Frame valid away from gamma parallel to e1: c1 = gamma x e1 normalized,
    // c2 = gamma x c1 normalized, c3 = gamma.
    AdaptedFrame frame;
    frame.r = 2;
    frame.B = [](const Vec& gamma) {
        Vec e1 = vec3(1, 0, 0);
        Vec c1 = hat(gamma) * e1;
        c1.normalize();
        Vec c2 = hat(gamma) * c1;
        c2.normalize();
        Mat B(3, 3);
        B.col(0) = c1;
        B.col(1) = c2;
        B.col(2) = gamma;
        return B;
    };
    d.linear = std::make_shared<LinearNHSystem>(chart, d.L, frame);

    d.default_state = {vec3(0.0, 0.0, 1.0), vec3(1.1, 0.4, 0.0)};
    d.integrator = {};
    Mat Iinv = I.inverse();
    d.oracle = [I, Iinv, g, chi](const State& s) -> Dynamics {
        const Vec& gamma = s.x;
        const Vec& w = s.y;
        Vec force = cross(I * w, w);
        if (g != 0.0) force += cross(gamma, Vec(g * chi));
        double lambda = -force.dot(Iinv * gamma) / gamma.dot(Iinv * gamma);
        Vec ydot = Iinv * (force + lambda * gamma);
        Vec xdot = hat(gamma) * w;
        return {xdot, ydot};
    };
    d.sample = [](std::mt19937_64& rng) -> State {
        // Unit gamma away from the frame singularity at e1.
        Vec gamma;
        do {
            gamma = random_vec(rng, 3, -1.0, 1.0);
        } while (gamma.norm() < 0.3 || std::abs(gamma.normalized()[0]) > 0.8);
        gamma.normalize();
        Vec w = random_vec(rng, 3, -1.0, 1.0);
        w -= w.dot(gamma) * gamma;
        return {gamma, w};
    };
    d.checks = {"structure_equations", "regularity_sweep", "route_equivalence",
                "energy", "momentum", "oracle_match"};
    return d;
}

// ---------------- Mobile robot ----------------

struct RobotConsts {
    double P, S, U, R, c;
};

RobotConsts robot_consts(const std::map<std::string, double>& p) {
    RobotConsts rc;
    rc.R = p.at("R");
    rc.c = p.at("c");
    const double m = p.at("m0") + 2.0 * p.at("m1");
    rc.P = rc.R * rc.R / 4.0 * (m + p.at("J") / (rc.c * rc.c)) + p.at("J2");
    rc.S = rc.R * rc.R / 4.0 * (m - p.at("J") / (rc.c * rc.c));
    rc.U = rc.R * rc.R * rc.R / (4.0 * rc.c * rc.c) * p.at("m0") * p.at("l");
    return rc;
}

Mat robot_metric(const std::map<std::string, double>& p) {
    const double m = p.at("m0") + 2.0 * p.at("m1");
    Mat G = Mat::Zero(5, 5);
    G(0, 0) = G(1, 1) = p.at("J2");
    G(2, 2) = m;
    G(3, 3) = m;
    G(3, 4) = G(4, 3) = p.at("m0") * p.at("l");
    G(4, 4) = p.at("J");
    return G;
}

// Wheel frame spanning the no-slip distribution; rotation sign chosen so the
// wheels drive the robot forward.
Mat robot_frame(double R, double c) {
    Mat B = Mat::Identity(5, 5);
    B(2, 0) = R / 2.0;
    B(4, 0) = R / (2.0 * c);
    B(2, 1) = R / 2.0;
    B(4, 1) = -R / (2.0 * c);
    return B;
}

Tensor3 robot_block_structure() {
    // Euclidean-group block on indices 2..4 with order (xi1, xi2, xi3):
    // [xi1,xi3] = -xi2, [xi2,xi3] = xi1.
    Tensor3 C(5, Mat::Zero(5, 5));
    C[3](2, 4) = -1; C[3](4, 2) = 1;
    C[2](3, 4) = 1;  C[2](4, 3) = -1;
    return C;
}

SystemDescriptor build_robot(const std::map<std::string, double>& overrides, const FDConfig& fd) {
    SystemDescriptor d;
    d.name = "mobile_robot";
    d.params = merge_params(
        {{"m0", 1.0}, {"m1", 0.5}, {"J", 0.8}, {"J2", 0.3}, {"l", 0.2}, {"c", 0.5}, {"R", 0.25}},
        overrides, d.name);
    require_positive(d.params, {"m0", "m1", "J", "J2", "c", "R"});
    if (!(d.params["l"] >= 0.0)) throw InvalidParameters("mobile_robot: l must be nonnegative");
    const double m = d.params["m0"] + 2.0 * d.params["m1"];
    if (!(d.params["J"] * m > std::pow(d.params["m0"] * d.params["l"], 2)))
        throw InvalidParameters("mobile_robot: inertia matrix not positive definite");
    RobotConsts rc = robot_consts(d.params);
    Mat G = robot_metric(d.params);
    Mat B = robot_frame(rc.R, rc.c);

    // Primary chart: quotient of the configuration bundle by the planar
    // motions, trivialized as (torus tangent) x (Euclidean algebra).
    auto chart = std::make_shared<AlgebroidChart>();
    chart->n = 2;
    chart->m = 5;
    chart->x_labels = {"psi1", "psi2"};
    chart->y_labels = {"dpsi1", "dpsi2", "xi1", "xi2", "xi3"};
    chart->anchor = [](const Vec&) {
        Mat r = Mat::Zero(2, 5);
        r(0, 0) = 1.0;
        r(1, 1) = 1.0;
        return r;
    };
    chart->structure = [C = robot_block_structure()](const Vec&) { return C; };
    chart->fd = fd;
    d.chart = chart;
    d.L = mechanical_lagrangian(chart, constant_metric(G), fd);
    AdaptedFrame frame;
    frame.r = 2;
    frame.B = [B](const Vec&) { return B; };
    d.linear = std::make_shared<LinearNHSystem>(chart, d.L, frame);

    State ad0 = {Vec(Vec::Zero(2)), Vec(Vec::Zero(5))};
    ad0.y[0] = 0.9;
    ad0.y[1] = 0.5;
    d.default_state = d.linear->from_adapted(ad0);
    d.integrator = {};

    auto oracle_core = [rc](double w1, double w2) {
        const double w = w2 - w1;
        const double den = rc.P * rc.P - rc.S * rc.S;
        double a1 = rc.U * w * (rc.P * w2 + rc.S * w1) / den;
        double a2 = -rc.U * w * (rc.P * w1 + rc.S * w2) / den;
        return std::make_pair(a1, a2);
    };
    d.oracle = [B, oracle_core](const State& s) -> Dynamics {
        auto [a1, a2] = oracle_core(s.y[0], s.y[1]);
        Vec acc = Vec::Zero(5);
        acc[0] = a1;
        acc[1] = a2;
        Vec xdot(2);
        xdot << s.y[0], s.y[1];
        return {xdot, Vec(B * acc)};
    };
    auto lin = d.linear;
    d.sample = [lin](std::mt19937_64& rng) -> State {
        Vec x = random_vec(rng, 2, -kPi, kPi);
        Vec c = random_vec(rng, 2, -1.0, 1.0);
        State ad{x, Vec(Vec::Zero(5))};
        ad.y[0] = c[0];
        ad.y[1] = c[1];
        return lin->from_adapted(ad);
    };

    // Reduction pair: full configuration-space system on the product of the
    // torus and the planar Euclidean group, staged through the quotient by
    // translations.
    auto pair = std::make_shared<ReductionPair>();
    auto full = std::make_shared<AlgebroidChart>();
    full->n = 5;
    full->m = 5;
    full->x_labels = {"psi1", "psi2", "theta", "x", "y"};
    full->y_labels = chart->y_labels;
    full->anchor = [](const Vec& x) {
        Mat r = Mat::Zero(5, 5);
        r(0, 0) = 1.0;
        r(1, 1) = 1.0;
        double ct = std::cos(x[2]), st = std::sin(x[2]);
        r(3, 2) = ct;  r(4, 2) = st;
        r(3, 3) = -st; r(4, 3) = ct;
        r(2, 4) = 1.0;
        return r;
    };
    full->structure = chart->structure;
    full->fd = fd;
    LagrangianField Lfull = mechanical_lagrangian(full, constant_metric(G), fd);
    AdaptedFrame fframe;
    fframe.r = 2;
    fframe.B = [B](const Vec&) { return B; };
    pair->src_lin = std::make_shared<LinearNHSystem>(full, Lfull, fframe);
    pair->dst_lin = d.linear;
    pair->morphism.source = full;
    pair->morphism.target = chart;
    pair->morphism.base_map = [](const Vec& x) { return Vec(x.head(2)); };
    pair->morphism.fiber_map = [](const Vec&) { return Mat::Identity(5, 5); };

    // Intermediate chart: quotient by translations only; heading survives.
    auto mid = std::make_shared<AlgebroidChart>();
    mid->n = 3;
    mid->m = 5;
    mid->x_labels = {"psi1", "psi2", "theta"};
    mid->y_labels = chart->y_labels;
    mid->anchor = [](const Vec&) {
        Mat r = Mat::Zero(3, 5);
        r(0, 0) = 1.0;
        r(1, 1) = 1.0;
        r(2, 4) = 1.0;
        return r;
    };
    mid->structure = chart->structure;
    mid->fd = fd;
    LagrangianField Lmid = mechanical_lagrangian(mid, constant_metric(G), fd);
    pair->mid_lin = std::make_shared<LinearNHSystem>(mid, Lmid, fframe);
    pair->stage1 = std::make_shared<MorphismSpec>();
    pair->stage1->source = full;
    pair->stage1->target = mid;
    pair->stage1->base_map = [](const Vec& x) { return Vec(x.head(3)); };
    pair->stage1->fiber_map = [](const Vec&) { return Mat::Identity(5, 5); };
    pair->stage2 = std::make_shared<MorphismSpec>();
    pair->stage2->source = mid;
    pair->stage2->target = chart;
    pair->stage2->base_map = [](const Vec& x) { return Vec(x.head(2)); };
    pair->stage2->fiber_map = [](const Vec&) { return Mat::Identity(5, 5); };

    State fad0 = {Vec(Vec::Zero(5)), Vec(Vec::Zero(5))};
    fad0.x[2] = 0.3;
    fad0.y[0] = 0.9;
    fad0.y[1] = 0.5;
    pair->src_start = pair->src_lin->from_adapted(fad0);
    auto fsrc = pair->src_lin;
    pair->sample_src = [fsrc](std::mt19937_64& rng) -> State {
        Vec x = random_vec(rng, 5, -1.0, 1.0);
        Vec c = random_vec(rng, 2, -1.0, 1.0);
        State ad{x, Vec(Vec::Zero(5))};
        ad.y[0] = c[0];
        ad.y[1] = c[1];
        return fsrc->from_adapted(ad);
    };
    d.reduction = pair;

    d.checks = {"structure_equations", "regularity_sweep", "route_equivalence",
                "energy", "oracle_match", "reduction", "chaplygin"};
    return d;
}

// ---------------- Rolling ball ----------------

struct BallConsts {
    double r, k2, Omega, afac; // afac = k^2/(k^2+r^2)
};

BallConsts ball_consts(const std::map<std::string, double>& p) {
    BallConsts bc;
    bc.r = p.at("r");
    bc.k2 = p.at("k") * p.at("k");
    bc.Omega = p.at("Omega");
    bc.afac = bc.k2 / (bc.k2 + bc.r * bc.r);
    return bc;
}

std::shared_ptr<AlgebroidChart> ball_full_chart() {
    auto ch = std::make_shared<AlgebroidChart>();
    ch->n = 5;
    ch->m = 5;
    ch->x_labels = {"x", "y", "theta", "phi", "psi"};
    ch->y_labels = {"vx", "vy", "dq1", "dq2", "dq3"};
    ch->anchor = [](const Vec& x) {
        Mat r = Mat::Zero(5, 5);
        r(0, 0) = 1.0;
        r(1, 1) = 1.0;
        r.block<3, 3>(2, 2) = euler_body_frame_anchor(x[2], x[4]);
        return r;
    };
    Tensor3 C(5, Mat::Zero(5, 5));
    Tensor3 q = so3_body_frame_structure();
    for (int g = 0; g < 3; ++g) C[2 + g].block<3, 3>(2, 2) = q[g];
    ch->structure = [C](const Vec&) { return C; };
    return ch;
}

std::shared_ptr<AlgebroidChart> ball_reduced_chart() {
    auto ch = std::make_shared<AlgebroidChart>();
    ch->n = 2;
    ch->m = 5;
    ch->x_labels = {"x", "y"};
    ch->y_labels = {"vx", "vy", "w1", "w2", "w3"};
    ch->anchor = [](const Vec&) {
        Mat r = Mat::Zero(2, 5);
        r(0, 0) = 1.0;
        r(1, 1) = 1.0;
        return r;
    };
    Tensor3 C(5, Mat::Zero(5, 5));
    Tensor3 q = so3_body_frame_structure();
    for (int g = 0; g < 3; ++g) C[2 + g].block<3, 3>(2, 2) = q[g];
    ch->structure = [C](const Vec&) { return C; };
    return ch;
}

std::vector<ScalarField> ball_constraints(const BallConsts& bc, int n) {
    // phi1 = a (y1 - r y4 + Omega x2), phi2 = a (y2 + r y3 - Omega x1),
    // with (x1, x2) the contact-point coordinates.
    std::vector<ScalarField> phis(2);
    for (int A = 0; A < 2; ++A) {
        phis[A].n_base = n;
        phis[A].n_fiber = 5;
        if (A == 0) {
            phis[A].eval = [bc](const Vec& x, const Vec& y) {
                return bc.afac * (y[0] - bc.r * y[3] + bc.Omega * x[1]);
            };
            phis[A].analytic_grad = [bc, n](const Vec&, const Vec&) {
                Vec g = Vec::Zero(n + 5);
                g[1] = bc.afac * bc.Omega;
                g[n + 0] = bc.afac;
                g[n + 3] = -bc.afac * bc.r;
                return g;
            };
        } else {
            phis[A].eval = [bc](const Vec& x, const Vec& y) {
                return bc.afac * (y[1] + bc.r * y[2] - bc.Omega * x[0]);
            };
            phis[A].analytic_grad = [bc, n](const Vec&, const Vec&) {
                Vec g = Vec::Zero(n + 5);
                g[0] = -bc.afac * bc.Omega;
                g[n + 1] = bc.afac;
                g[n + 2] = bc.afac * bc.r;
                return g;
            };
        }
    }
    return phis;
}

Dynamics ball_oracle(const BallConsts& bc, const AlgebroidChart& chart, const State& s) {
    const double f = bc.Omega / (bc.k2 + bc.r * bc.r);
    Vec ydot = Vec::Zero(5);
    ydot[0] = -bc.k2 * f * s.y[1];
    ydot[1] = bc.k2 * f * s.y[0];
    ydot[2] = bc.r * f * s.y[0];
    ydot[3] = bc.r * f * s.y[1];
    return {chart.rho(s.x) * s.y, ydot};
}

SystemDescriptor build_ball(const std::map<std::string, double>& overrides, const FDConfig& fd) {
    SystemDescriptor d;
    d.name = "rolling_ball";
    d.params = merge_params({{"r", 1.0}, {"k", std::sqrt(0.4)}, {"Omega", 0.5}}, overrides, d.name);
    require_positive(d.params, {"r", "k"});
    BallConsts bc = ball_consts(d.params);

    auto chart = ball_full_chart();
    chart->fd = fd;
    d.chart = chart;
    Mat G = Vec(Vec::Ones(5)).asDiagonal();
    G(2, 2) = G(3, 3) = G(4, 4) = bc.k2;
    d.L = mechanical_lagrangian(chart, constant_metric(G), fd);
    d.nonlinear = std::make_shared<NonlinearNHSystem>(chart, d.L, ball_constraints(bc, 5));

    State st;
    st.x = Vec(5);
    st.x << 0.4, -0.3, 1.1, 0.5, 0.3;
    Vec q = vec3(0.3, -0.2, 0.5);
    st.y = Vec(5);
    st.y << bc.r * q[1] - bc.Omega * st.x[1], -bc.r * q[0] + bc.Omega * st.x[0], q[0], q[1], q[2];
    d.default_state = st;
    d.integrator = {};
    d.oracle = [bc, chart](const State& s) { return ball_oracle(bc, *chart, s); };
    d.sample = [bc](std::mt19937_64& rng) -> State {
        State s;
        s.x = Vec(5);
        Vec xy = random_vec(rng, 2, -1.0, 1.0);
        Vec ang = random_vec(rng, 3, -kPi, kPi);
        double theta = 0.45 + (ang[0] + kPi) / (2 * kPi) * (kPi - 0.9); // inside [0.45, pi-0.45]
        s.x << xy[0], xy[1], theta, ang[1], ang[2];
        Vec q = random_vec(rng, 3, -1.0, 1.0);
        s.y = Vec(5);
        s.y << bc.r * q[1] - bc.Omega * s.x[1], -bc.r * q[0] + bc.Omega * s.x[0], q[0], q[1], q[2];
        return s;
    };

    auto pair = std::make_shared<ReductionPair>();
    auto red_chart = ball_reduced_chart();
    red_chart->fd = fd;
    LagrangianField Lred = mechanical_lagrangian(red_chart, constant_metric(G), fd);
    pair->src_nl = d.nonlinear;
    pair->dst_nl = std::make_shared<NonlinearNHSystem>(red_chart, Lred, ball_constraints(bc, 2));
    pair->morphism.source = chart;
    pair->morphism.target = red_chart;
    pair->morphism.base_map = [](const Vec& x) { return Vec(x.head(2)); };
    pair->morphism.fiber_map = [](const Vec&) { return Mat::Identity(5, 5); };
    pair->src_start = d.default_state;
    pair->sample_src = d.sample;
    d.reduction = pair;

    d.checks = {"structure_equations", "regularity_sweep", "route_equivalence",
                "energy", "oracle_match", "reduction", "bracket_table"};
    return d;
}

} // namespace

std::vector<std::string> system_names() {
    return {"suslov", "chaplygin_sleigh", "veselova", "mobile_robot", "rolling_ball"};
}

bool known_system(const std::string& name) {
    for (const auto& n : system_names())
        if (n == name) return true;
    return false;
}

SystemDescriptor build(const std::string& name, const std::map<std::string, double>& overrides,
                       const FDConfig& fd) {
    if (name == "suslov") return build_suslov(overrides, fd);
    if (name == "chaplygin_sleigh") return build_sleigh(overrides, fd);
    if (name == "veselova") return build_veselova(overrides, fd);
    if (name == "mobile_robot") return build_robot(overrides, fd);
    if (name == "rolling_ball") return build_ball(overrides, fd);
    throw InvalidParameters("unknown system '" + name + "'");
}

Dynamics oracle_dynamics(const SystemDescriptor& desc, const State& s) {
    if (desc.is_linear()) {
        State ad = desc.linear->to_adapted(s);
        for (int A = desc.linear->r(); A < desc.linear->m(); ++A)
            if (std::abs(ad.y[A]) > desc.linear->on_tol())
                throw OffConstraint("oracle_dynamics: state off the constraint");
    } else {
        desc.nonlinear->require_on_constraint(s);
    }
    return desc.oracle(s);
}

std::map<std::string, Observable> ball_full_observables(const SystemDescriptor& desc) {
    if (desc.name != "rolling_ball") throw InvalidParameters("not a rolling-ball descriptor");
    BallConsts bc = ball_consts(desc.params);
    auto chart = desc.chart;
    std::map<std::string, Observable> obs;
    obs["x"] = base_coordinate_observable(chart, 0, "x");
    obs["y"] = base_coordinate_observable(chart, 1, "y");
    obs["q1"] = quasi_coordinate_observable(chart, 2, "q1");
    obs["q2"] = quasi_coordinate_observable(chart, 3, "q2");
    obs["q3"] = quasi_coordinate_observable(chart, 4, "q3");
    Vec c1 = Vec::Zero(5), c2 = Vec::Zero(5), c3 = Vec::Zero(5);
    c1[0] = bc.r;
    c1[3] = bc.k2;
    c2[1] = bc.r;
    c2[2] = -bc.k2;
    c3[4] = bc.k2;
    obs["pi1"] = fiber_linear_observable(chart, c1, "pi1");
    obs["pi2"] = fiber_linear_observable(chart, c2, "pi2");
    obs["pi3"] = fiber_linear_observable(chart, c3, "pi3");
    const int n = chart->n;
    for (int A = 0; A < 2; ++A) {
        Observable o;
        o.label = A == 0 ? "pi4" : "pi5";
        o.f = ball_constraints(bc, n)[A];
        obs[o.label] = o;
    }
    return obs;
}

std::map<std::string, Observable> ball_reduced_observables(const SystemDescriptor& desc) {
    if (desc.name != "rolling_ball" || !desc.reduction)
        throw InvalidParameters("not a rolling-ball descriptor");
    BallConsts bc = ball_consts(desc.params);
    auto chart = desc.reduction->dst_nl->chart_ptr();
    std::map<std::string, Observable> obs;
    obs["x"] = base_coordinate_observable(chart, 0, "x'");
    obs["y"] = base_coordinate_observable(chart, 1, "y'");
    Vec c1 = Vec::Zero(5), c2 = Vec::Zero(5), c3 = Vec::Zero(5);
    c1[0] = bc.r;
    c1[3] = bc.k2;
    c2[1] = bc.r;
    c2[2] = -bc.k2;
    c3[4] = bc.k2;
    obs["pi1"] = fiber_linear_observable(chart, c1, "pi1'");
    obs["pi2"] = fiber_linear_observable(chart, c2, "pi2'");
    obs["pi3"] = fiber_linear_observable(chart, c3, "pi3'");
    for (int A = 0; A < 2; ++A) {
        Observable o;
        o.label = A == 0 ? "pi4" : "pi5";
        o.f = ball_constraints(bc, 2)[A];
        obs[o.label] = o;
    }
    return obs;
}

std::vector<NamedChart> all_charts() {
    std::vector<NamedChart> out;
    auto add = [&out](const std::string& name, std::shared_ptr<const AlgebroidChart> ch,
                      std::function<Vec(std::mt19937_64&)> sampler) {
        out.push_back({name, std::move(ch), std::move(sampler)});
    };
    auto zero_dim = [](std::mt19937_64&) { return Vec(0); };
    SystemDescriptor sleigh = build("chaplygin_sleigh");
    SystemDescriptor suslov = build("suslov");
    SystemDescriptor veselova = build("veselova");
    SystemDescriptor robot = build("mobile_robot");
    SystemDescriptor ball = build("rolling_ball");
    add("sleigh_algebra", sleigh.chart, zero_dim);
    add("suslov_algebra", suslov.chart, zero_dim);
    add("veselova_action", veselova.chart, [](std::mt19937_64& rng) {
        Vec g;
        do {
            g = random_vec(rng, 3, -1.0, 1.0);
        } while (g.norm() < 0.3);
        return Vec(g.normalized());
    });
    add("robot_quotient", robot.chart,
        [](std::mt19937_64& rng) { return random_vec(rng, 2, -kPi, kPi); });
    add("robot_full", robot.reduction->src_lin->chart_ptr(), [](std::mt19937_64& rng) {
        Vec x = random_vec(rng, 5, -1.0, 1.0);
        return x;
    });
    add("ball_full", ball.chart, [](std::mt19937_64& rng) {
        Vec x = random_vec(rng, 5, -1.0, 1.0);
        x[2] = 0.45 + (x[2] + 1.0) / 2.0 * (kPi - 0.9);
        return x;
    });
    add("ball_quotient", ball.reduction->dst_nl->chart_ptr(),
        [](std::mt19937_64& rng) { return random_vec(rng, 2, -1.0, 1.0); });
    return out;
}

} // namespace systems
} // namespace almech
