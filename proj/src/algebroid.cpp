#include "almech/algebroid.hpp"

#include <cmath>

namespace almech {

Mat AlgebroidChart::rho(const Vec& x) const {
    Mat r = anchor(x);
    if (r.rows() != n || r.cols() != m) throw Error("anchor has wrong shape");
    if (!all_finite(r)) throw NonFiniteEvaluation("anchor evaluated to non-finite values");
    return r;
}

Tensor3 AlgebroidChart::C(const Vec& x) const {
    Tensor3 c = structure(x);
    if (static_cast<int>(c.size()) != m) throw Error("structure tensor has wrong rank");
    for (const Mat& layer : c) {
        if (layer.rows() != m || layer.cols() != m) throw Error("structure tensor layer has wrong shape");
        if (!all_finite(layer)) throw NonFiniteEvaluation("structure tensor non-finite");
    }
    return c;
}

Vec AlgebroidChart::structure_contract(const Tensor3& c, const Vec& a, const Vec& b) const {
    Vec out = Vec::Zero(m);
    for (int g = 0; g < m; ++g) out[g] = a.dot(c[g] * b);
    return out;
}

Vec AlgebroidChart::structure_contract(const Vec& x, const Vec& a, const Vec& b) const {
    return structure_contract(C(x), a, b);
}

AlgebroidChart tangent_bundle_chart(int n, std::vector<std::string> labels) {
    AlgebroidChart ch;
    ch.n = n;
    ch.m = n;
    ch.anchor = [n](const Vec&) { return Mat::Identity(n, n); };
    ch.structure = [n](const Vec&) { return Tensor3(n, Mat::Zero(n, n)); };
    ch.x_labels = labels;
    for (int i = 0; i < n; ++i)
        ch.y_labels.push_back(labels.size() == static_cast<size_t>(n) ? "d" + labels[i]
                                                                      : "y" + std::to_string(i + 1));
    if (ch.x_labels.empty())
        for (int i = 0; i < n; ++i) ch.x_labels.push_back("x" + std::to_string(i + 1));
    return ch;
}

AlgebroidChart lie_algebra_chart(const Tensor3& constants, std::vector<std::string> labels) {
    AlgebroidChart ch;
    ch.n = 0;
    ch.m = static_cast<int>(constants.size());
    ch.anchor = [m = ch.m](const Vec&) { return Mat::Zero(0, m); };
    ch.structure = [constants](const Vec&) { return constants; };
    ch.y_labels = labels;
    if (ch.y_labels.empty())
        for (int i = 0; i < ch.m; ++i) ch.y_labels.push_back("y" + std::to_string(i + 1));
    return ch;
}

Mat SectionField::jacobian(const Vec& x, const FDConfig& fd) const {
    if (analytic_jacobian) return analytic_jacobian(x);
    if (x.size() == 0) {
        Vec v = eval(x);
        return Mat::Zero(v.size(), 0);
    }
    return fd_jacobian(eval, x, fd.step_base, fd.scheme);
}

SectionField constant_section(const Vec& value) {
    SectionField s;
    s.eval = [value](const Vec&) { return value; };
    s.analytic_jacobian = [value](const Vec& x) { return Mat::Zero(value.size(), x.size()); };
    return s;
}

ProlongationVector vertical_endomorphism(const ProlongationVector& z) {
    return {z.base_state, Vec::Zero(z.comp_X.size()), z.comp_X};
}

ProlongationVector liouville(const State& s) {
    return {s, Vec::Zero(s.y.size()), s.y};
}

ProlongationVector vertical_lift(const Vec& b, const State& s) {
    return {s, Vec::Zero(b.size()), b};
}

double anchored_derivative(const AlgebroidChart& chart, const ProlongationVector& z,
                           const ScalarField& g, const FDConfig& fd) {
    const Vec& x = z.base_state.x;
    const Vec& y = z.base_state.y;
    Vec grad = fd_gradient(g, x, y, fd);
    Vec xdot = chart.rho(x) * z.comp_X;
    double out = 0.0;
    if (chart.n > 0) out += grad.head(chart.n).dot(xdot);
    out += grad.tail(chart.m).dot(z.comp_V);
    return out;
}

StructureReport check_structure_equations(const AlgebroidChart& chart,
                                          const std::vector<Vec>& points, double tol) {
    StructureReport rep;
    const int n = chart.n, m = chart.m;
    for (const Vec& x : points) {
        Mat rho = chart.rho(x);
        Tensor3 C = chart.C(x);

        for (int g = 0; g < m; ++g)
            rep.max_residual_antisymmetry =
                std::max(rep.max_residual_antisymmetry, (C[g] + C[g].transpose()).cwiseAbs().maxCoeff());

        // x-derivatives of anchor columns and structure layers.
        std::vector<Mat> drho(n);   // drho[j] = d(rho)/dx^j, n x m
        std::vector<Tensor3> dC(n); // dC[j][nu], m x m
        for (int j = 0; j < n; ++j) {
            Vec ej = Vec::Zero(n);
            ej[j] = 1.0;
            drho[j] = fd_matrix_directional([&](const Vec& xx) { return chart.rho(xx); }, x, ej,
                                            chart.fd.step_base);
            Tensor3 layers(m);
            for (int nu = 0; nu < m; ++nu)
                layers[nu] = fd_matrix_directional(
                    [&, nu](const Vec& xx) { return chart.C(xx)[nu]; }, x, ej, chart.fd.step_base);
            dC[j] = layers;
        }

        // Anchor compatibility:
        //   rho^j_a d(rho^i_b)/dx^j - rho^j_b d(rho^i_a)/dx^j = rho^i_g C^g_{ab}.
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int i = 0; i < n; ++i) {
                    double lhs = 0.0;
                    for (int j = 0; j < n; ++j)
                        lhs += rho(j, a) * drho[j](i, b) - rho(j, b) * drho[j](i, a);
                    double rhs = 0.0;
                    for (int g = 0; g < m; ++g) rhs += rho(i, g) * C[g](a, b);
                    rep.max_residual_anchor = std::max(rep.max_residual_anchor, std::abs(lhs - rhs));
                }

        // Cyclic Jacobi identity:
        //   sum_cyc(a,b,g) [ rho^i_a dC^nu_{bg}/dx^i + C^mu_{bg} C^nu_{a mu} ] = 0.
        auto term = [&](int a, int b, int g, int nu) {
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += rho(i, a) * dC[i][nu](b, g);
            for (int mu = 0; mu < m; ++mu) t += C[mu](b, g) * C[nu](a, mu);
            return t;
        };
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int g = 0; g < m; ++g)
                    for (int nu = 0; nu < m; ++nu) {
                        double r = term(a, b, g, nu) + term(b, g, a, nu) + term(g, a, b, nu);
                        rep.max_residual_jacobi = std::max(rep.max_residual_jacobi, std::abs(r));
                    }
    }
    rep.pass = rep.max_residual_anchor <= tol && rep.max_residual_jacobi <= tol &&
               rep.max_residual_antisymmetry <= tol;
    return rep;
}

Vec bracket_sections(const AlgebroidChart& chart, const SectionField& sigma,
                     const SectionField& eta, const Vec& x) {
    Vec sv = sigma(x), ev = eta(x);
    Mat Js = sigma.jacobian(x, chart.fd);
    Mat Je = eta.jacobian(x, chart.fd);
    Mat rho = chart.rho(x);
    Vec out = chart.structure_contract(x, sv, ev);
    if (chart.n > 0) out += Je * (rho * sv) - Js * (rho * ev);
    if (!all_finite(out)) throw NonFiniteEvaluation("bracket_sections produced non-finite components");
    return out;
}

Vec differential_of_function(const AlgebroidChart& chart, const ScalarField& f, const Vec& x) {
    if (chart.n == 0) return Vec::Zero(chart.m);
    Vec y0 = Vec::Zero(f.n_fiber);
    Vec grad = fd_gradient(f, x, y0, chart.fd);
    return chart.rho(x).transpose() * grad.head(chart.n);
}

ProlongationVector complete_lift(const AlgebroidChart& chart, const SectionField& sigma,
                                 const State& s) {
    Vec sv = sigma(s.x);
    Vec comp_V = -chart.structure_contract(s.x, sv, s.y);
    if (chart.n > 0) {
        Mat J = sigma.jacobian(s.x, chart.fd);
        comp_V += J * (chart.rho(s.x) * s.y);
    }
    return {s, sv, comp_V};
}

} // namespace almech
