#include "almech/lagrangian.hpp"

#include <cmath>

namespace almech {

namespace {

Mat metric_at(const MetricField& mf, const Vec& x) {
    Mat G = mf.G(x);
    if (!all_finite(G)) throw NonFiniteEvaluation("metric evaluated to non-finite values");
    return 0.5 * (G + G.transpose());
}

Vec potential_grad(const MetricField& mf, const Vec& x, const FDConfig& fd) {
    if (!mf.has_potential()) return Vec::Zero(x.size());
    if (mf.V.has_grad()) return mf.V.analytic_grad(x, Vec(0)).head(x.size());
    return fd_gradient_raw([&](const Vec& xx) { return mf.V.eval(xx, Vec(0)); }, x, fd.step_base,
                           fd.scheme);
}

} // namespace

Vec LagrangianField::grad_x(const State& s) const {
    if (chart->n == 0) return Vec(0);
    if (metric) {
        // d/dx [ 1/2 y^T G(x) y - V(x) ]
        Vec g(chart->n);
        for (int i = 0; i < chart->n; ++i) {
            Vec ei = Vec::Zero(chart->n);
            ei[i] = 1.0;
            Mat dG = fd_matrix_directional([&](const Vec& xx) { return metric_at(*metric, xx); },
                                           s.x, ei, fd.step_base);
            g[i] = 0.5 * s.y.dot(dG * s.y);
        }
        return g - potential_grad(*metric, s.x, fd);
    }
    if (L.has_grad()) return L.analytic_grad(s.x, s.y).head(chart->n);
    return fd_gradient_raw([&](const Vec& xx) { return L.eval(xx, s.y); }, s.x, fd.step_base,
                           fd.scheme);
}

Vec LagrangianField::grad_y(const State& s) const {
    if (metric) return metric_at(*metric, s.x) * s.y;
    if (L.has_grad()) return L.analytic_grad(s.x, s.y).tail(chart->m);
    return fd_gradient_raw([&](const Vec& yy) { return L.eval(s.x, yy); }, s.y, fd.step_fiber,
                           fd.scheme);
}

LagrangianDerivatives LagrangianField::derivatives(const State& s) const {
    LagrangianDerivatives d;
    d.value = value(s);
    d.grad_x = grad_x(s);
    d.grad_y = grad_y(s);
    if (metric) {
        d.W = metric_at(*metric, s.x);
        d.hess_xy = Mat(chart->n, chart->m);
        for (int i = 0; i < chart->n; ++i) {
            Vec ei = Vec::Zero(chart->n);
            ei[i] = 1.0;
            Mat dG = fd_matrix_directional([&](const Vec& xx) { return metric_at(*metric, xx); },
                                           s.x, ei, fd.step_base);
            d.hess_xy.row(i) = (dG * s.y).transpose();
        }
        return d;
    }
    // Generic path: square-root-widened steps for second differences.
    const double hy = std::sqrt(fd.step_fiber);
    const double hx = std::sqrt(fd.step_base);
    if (L.has_grad()) {
        // Differentiate the analytic gradient once.
        auto gy = [&](const Vec& yy) -> Vec { return L.analytic_grad(s.x, yy).tail(chart->m); };
        Mat Wy = chart->m > 0 ? fd_jacobian(gy, s.y, fd.step_fiber, fd.scheme) : Mat(0, 0);
        d.W = 0.5 * (Wy + Wy.transpose());
        if (chart->n > 0) {
            auto gx = [&](const Vec& xx) -> Vec { return L.analytic_grad(xx, s.y).tail(chart->m); };
            d.hess_xy = fd_jacobian(gx, s.x, fd.step_base, fd.scheme).transpose();
        } else {
            d.hess_xy = Mat(0, chart->m);
        }
        return d;
    }
    auto f = [&](const Vec& xx, const Vec& yy) { return L.eval(xx, yy); };
    Mat Wfd = fd_hessian_block(
        [&](const Vec& u, const Vec& v) {
            Vec yy = s.y;
            yy += (u - s.y) + (v - s.y);
            return f(s.x, yy);
        },
        s.y, s.y, true, true, hy, hy);
    d.W = 0.5 * (Wfd + Wfd.transpose());
    if (chart->n > 0) {
        d.hess_xy = fd_hessian_block([&](const Vec& xx, const Vec& yy) { return f(xx, yy); }, s.x,
                                     s.y, false, false, hx, hy);
    } else {
        d.hess_xy = Mat(0, chart->m);
    }
    return d;
}

Mat hessian_W(const LagrangianField& Lf, const State& s) {
    return Lf.derivatives(s).W;
}

double energy(const LagrangianField& Lf, const State& s) {
    return Lf.grad_y(s).dot(s.y) - Lf.value(s);
}

Vec energy_differential(const LagrangianField& Lf, const State& s) {
    auto d = Lf.derivatives(s);
    const int n = Lf.chart->n, m = Lf.chart->m;
    Vec dE(2 * m);
    Vec gxE = Vec::Zero(n);
    if (n > 0) gxE = d.hess_xy * s.y - d.grad_x;
    dE.head(m) = n > 0 ? Vec(Lf.chart->rho(s.x).transpose() * gxE) : Vec::Zero(m);
    dE.tail(m) = d.W * s.y;
    return dE;
}

Mat cartan_two_form(const LagrangianField& Lf, const State& s) {
    auto d = Lf.derivatives(s);
    const int n = Lf.chart->n, m = Lf.chart->m;
    Mat M = Mat::Zero(m, m);
    if (n > 0) {
        Mat A = d.hess_xy.transpose() * Lf.chart->rho(s.x); // A_{ab} = d2L/dx dy^a rho^i_b
        M = A - A.transpose();
    }
    Tensor3 C = Lf.chart->C(s.x);
    for (int g = 0; g < m; ++g) M += d.grad_y[g] * C[g];
    Mat omega(2 * m, 2 * m);
    omega << M, d.W, -d.W, Mat::Zero(m, m);
    return omega;
}

Dynamics free_dynamics(const LagrangianField& Lf, const State& s) {
    auto d = Lf.derivatives(s);
    const int n = Lf.chart->n, m = Lf.chart->m;
    Mat rho = Lf.chart->rho(s.x);
    Vec b = Vec::Zero(m);
    if (n > 0) {
        b += rho.transpose() * d.grad_x;
        b -= d.hess_xy.transpose() * (rho * s.y);
    }
    Tensor3 C = Lf.chart->C(s.x);
    for (int g = 0; g < m; ++g) b -= d.grad_y[g] * (C[g] * s.y);
    Vec f;
    try {
        f = solve_dense(d.W, b);
    } catch (const SingularMatrix&) {
        throw SingularMatrix("free_dynamics: Lagrangian not regular at state (W singular)");
    }
    return {rho * s.y, f};
}

ProlongationVector free_dynamics_section(const LagrangianField& Lf, const State& s) {
    Dynamics dyn = free_dynamics(Lf, s);
    return {s, s.y, dyn.ydot};
}

LagrangianField mechanical_lagrangian(std::shared_ptr<const AlgebroidChart> chart,
                                      std::shared_ptr<const MetricField> metric, FDConfig fd) {
    LagrangianField Lf;
    Lf.chart = chart;
    Lf.metric = metric;
    Lf.fd = fd;
    Lf.L.n_base = chart->n;
    Lf.L.n_fiber = chart->m;
    auto mf = metric;
    Lf.L.eval = [mf](const Vec& x, const Vec& y) {
        Mat G = metric_at(*mf, x);
        double v = mf->has_potential() ? mf->V.eval(x, Vec(0)) : 0.0;
        return 0.5 * y.dot(G * y) - v;
    };
    FDConfig fdc = fd;
    Lf.L.analytic_grad = [mf, fdc](const Vec& x, const Vec& y) {
        Vec g(x.size() + y.size());
        for (int i = 0; i < x.size(); ++i) {
            Vec ei = Vec::Zero(x.size());
            ei[i] = 1.0;
            Mat dG = fd_matrix_directional([&](const Vec& xx) { return metric_at(*mf, xx); }, x, ei,
                                           fdc.step_base);
            g[i] = 0.5 * y.dot(dG * y);
        }
        if (x.size() > 0) g.head(x.size()) -= potential_grad(*mf, x, fdc);
        g.tail(y.size()) = metric_at(*mf, x) * y;
        return g;
    };
    return Lf;
}

Tensor3 levi_civita_coeffs(const AlgebroidChart& chart, const MetricField& metric, const Vec& x,
                           const FDConfig& fd) {
    const int n = chart.n, m = chart.m;
    Mat G = metric_at(metric, x);
    Mat rho = chart.rho(x);
    Tensor3 C = chart.C(x);

    // dG[k](a,b) = rho^i_k dG_{ab}/dx^i (derivative along the anchored frame direction).
    Tensor3 dG(m, Mat::Zero(m, m));
    if (n > 0) {
        for (int k = 0; k < m; ++k) {
            Vec dir = rho.col(k);
            dG[k] = fd_matrix_directional([&](const Vec& xx) { return metric_at(metric, xx); }, x,
                                          dir, fd.step_base);
        }
    }
    auto bracket_dG = [&](int a, int b, int g) { return dG[g](a, b); };
    auto bracket_C = [&](int a, int b, int g) {
        double v = 0.0;
        for (int mu = 0; mu < m; ++mu) v += C[mu](a, b) * G(mu, g);
        return v;
    };

    // Koszul expansion on the frame: 2 G(nabla_{e_b} e_g, e_nu) =
    //   dG[b](g,nu) + dG[g](b,nu) - dG[nu](g,b)
    // + G(e_g,[e_nu,e_b]) + G(e_b,[e_nu,e_g]) - G(e_nu,[e_g,e_b]).
    Tensor3 Gamma(m, Mat::Zero(m, m));
    for (int b = 0; b < m; ++b) {
        Mat rhs(m, m); // (g, nu)
        for (int g = 0; g < m; ++g)
            for (int nu = 0; nu < m; ++nu)
                rhs(g, nu) = 0.5 * (bracket_dG(g, nu, b) + bracket_dG(b, nu, g) - bracket_dG(g, b, nu) +
                                    bracket_C(nu, b, g) + bracket_C(nu, g, b) - bracket_C(g, b, nu));
        // Gamma^a_{bg} solves G_{a nu} Gamma^a_{bg} = rhs(g, nu).
        Mat sol = solve_dense(G, Mat(rhs.transpose())); // columns indexed by g
        for (int g = 0; g < m; ++g)
            for (int a = 0; a < m; ++a) Gamma[a](b, g) = sol(a, g);
    }
    return Gamma;
}

Vec connection_spray(const Tensor3& Gamma, const Vec& y) {
    const int m = static_cast<int>(Gamma.size());
    Vec out = Vec::Zero(m);
    for (int g = 0; g < m; ++g) out[g] = -0.5 * y.dot((Gamma[g] + Gamma[g].transpose()) * y);
    return out;
}

} // namespace almech
