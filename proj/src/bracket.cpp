#include "almech/bracket.hpp"

#include <cmath>

namespace almech {

Observable base_coordinate_observable(std::shared_ptr<const AlgebroidChart> chart, int index,
                                      const std::string& label) {
    Observable o;
    o.label = label;
    o.f.n_base = chart->n;
    o.f.n_fiber = chart->m;
    o.f.eval = [index](const Vec& x, const Vec&) { return x[index]; };
    o.f.analytic_grad = [index, n = chart->n, m = chart->m](const Vec&, const Vec&) {
        Vec g = Vec::Zero(n + m);
        g[index] = 1.0;
        return g;
    };
    return o;
}

Observable fiber_linear_observable(std::shared_ptr<const AlgebroidChart> chart, const Vec& coeffs,
                                   const std::string& label) {
    Observable o;
    o.label = label;
    o.f.n_base = chart->n;
    o.f.n_fiber = chart->m;
    o.f.eval = [coeffs](const Vec&, const Vec& y) { return coeffs.dot(y); };
    o.f.analytic_grad = [coeffs, n = chart->n, m = chart->m](const Vec&, const Vec&) {
        Vec g = Vec::Zero(n + m);
        g.tail(m) = coeffs;
        return g;
    };
    return o;
}

Observable quasi_coordinate_observable(std::shared_ptr<const AlgebroidChart> chart, int alpha,
                                       const std::string& label) {
    Observable o;
    o.label = label;
    o.f.n_base = chart->n;
    o.f.n_fiber = chart->m;
    // No honest primitive exists; only the differential (the dual coform
    // e^alpha) has operational meaning.
    o.f.eval = [](const Vec&, const Vec&) { return 0.0; };
    o.custom_diff = [alpha, m = chart->m](const State&) {
        Vec aX = Vec::Zero(m);
        aX[alpha] = 1.0;
        return std::make_pair(aX, Vec(Vec::Zero(m)));
    };
    return o;
}

Vec observable_differential(const AlgebroidChart& chart, const Observable& f, const State& s,
                            const FDConfig& fd) {
    const int m = chart.m;
    Vec out(2 * m);
    if (f.custom_diff) {
        auto [aX, aV] = f.custom_diff(s);
        out.head(m) = aX;
        out.tail(m) = aV;
        return out;
    }
    Vec g = fd_gradient(f.f, s.x, s.y, fd);
    out.head(m) = chart.n > 0 ? Vec(chart.rho(s.x).transpose() * g.head(chart.n)) : Vec::Zero(m);
    out.tail(m) = g.tail(m);
    return out;
}

Vec hamiltonian_section(const LagrangianField& Lf, const Observable& f, const State& s) {
    Mat om = cartan_two_form(Lf, s);
    Vec df = observable_differential(*Lf.chart, f, s, Lf.fd);
    try {
        return solve_dense(Mat(om.transpose()), df);
    } catch (const SingularMatrix&) {
        throw SingularMatrix("hamiltonian_section: omega_L singular at state");
    }
}

namespace {

// Converts a prolongation coform from the original chart basis to the adapted
// basis of a linear system at the given adapted state.
Vec coform_to_adapted(const LinearNHSystem& sys, const Vec& df_orig, const State& adapted) {
    const int m = sys.m();
    const int n = sys.chart().n;
    Mat B = sys.frame().B(adapted.x);
    Vec aX = df_orig.head(m), aV = df_orig.tail(m);
    Vec out(2 * m);
    Vec corr = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        Vec ei = Vec::Zero(n);
        ei[i] = 1.0;
        Mat dB = fd_matrix_directional(sys.frame().B, adapted.x, ei, sys.chart().fd.step_base);
        corr[i] = aV.dot(dB * adapted.y);
    }
    Mat rho = sys.chart().rho(adapted.x);
    out.head(m) = B.transpose() * (aX + (n > 0 ? Vec(rho.transpose() * corr) : Vec::Zero(m)));
    out.tail(m) = B.transpose() * aV;
    return out;
}

Vec hamiltonian_adapted(const LinearNHSystem& sys, const Observable& f, const State& adapted) {
    State orig = sys.from_adapted(adapted);
    Vec df = observable_differential(sys.chart(), f, orig, sys.lagrangian().fd);
    Vec dft = coform_to_adapted(sys, df, adapted);
    Mat om = sys.omega(adapted);
    return solve_dense(Mat(om.transpose()), dft);
}

double nh_bracket_nonlinear_impl(const NonlinearNHSystem& sys, const Observable& f,
                                 const Observable& g, const State& s, bool gate) {
    if (gate) sys.require_on_constraint(s);
    Mat om = sys.omega(s);
    Vec df = observable_differential(sys.chart(), f, s, sys.lagrangian().fd);
    Vec dg = observable_differential(sys.chart(), g, s, sys.lagrangian().fd);
    Vec Xf = solve_dense(Mat(om.transpose()), df);
    Vec Xg = solve_dense(Mat(om.transpose()), dg);
    Mat Pbar = sys.projector_Pbar(s);
    Vec pf = Pbar * Xf, pg = Pbar * Xg;
    return pf.dot(om * pg);
}

} // namespace

double nh_bracket(const LinearNHSystem& sys, const Observable& f, const Observable& g,
                  const State& original) {
    State ad = sys.snap(sys.to_adapted(original));
    Vec Xf = hamiltonian_adapted(sys, f, ad);
    Vec Xg = hamiltonian_adapted(sys, g, ad);
    Mat Pbar = sys.projector_Pbar(ad).P;
    Mat om = sys.omega(ad);
    Vec pf = Pbar * Xf, pg = Pbar * Xg;
    return pf.dot(om * pg);
}

double nh_bracket(const NonlinearNHSystem& sys, const Observable& f, const Observable& g,
                  const State& s) {
    return nh_bracket_nonlinear_impl(sys, f, g, s, true);
}

double nh_bracket_restricted(const LinearNHSystem& sys, const Observable& f, const Observable& g,
                             const State& original) {
    State ad = sys.snap(sys.to_adapted(original));
    State orig = sys.from_adapted(ad);
    Mat om = sys.omega(ad);
    Mat U = sys.tdd_basis();
    Mat A = U.transpose() * om.transpose() * U;
    auto xbar = [&](const Observable& h) {
        Vec dh = coform_to_adapted(
            sys, observable_differential(sys.chart(), h, orig, sys.lagrangian().fd), ad);
        return Vec(U * solve_dense(A, Vec(U.transpose() * dh)));
    };
    Vec Xf = xbar(f), Xg = xbar(g);
    return Xf.dot(om * Xg);
}

double jacobiator(const NonlinearNHSystem& sys, const Observable& f, const Observable& g,
                  const Observable& h, const State& s) {
    auto inner = [&sys](const Observable& a, const Observable& b, const std::string& label) {
        Observable o;
        o.label = label;
        o.f.n_base = sys.chart().n;
        o.f.n_fiber = sys.chart().m;
        o.f.eval = [&sys, a, b](const Vec& x, const Vec& y) {
            return nh_bracket_nonlinear_impl(sys, a, b, State{x, y}, false);
        };
        return o;
    };
    double t1 = nh_bracket(sys, f, inner(g, h, "{g,h}"), s);
    double t2 = nh_bracket(sys, g, inner(h, f, "{h,f}"), s);
    double t3 = nh_bracket(sys, h, inner(f, g, "{f,g}"), s);
    return t1 + t2 + t3;
}

EvolutionReport evolution_residual(const LinearNHSystem& sys, const Observable& f,
                                   const Trajectory& traj) {
    EvolutionReport rep;
    std::vector<double> fv(traj.size());
    for (size_t i = 0; i < traj.size(); ++i) fv[i] = f(traj.states[i]);
    std::vector<double> fdot = series_derivative(traj.times, fv);
    for (size_t i = 2; i + 2 < traj.size(); ++i) {
        const State& st = traj.states[i];
        State ad = sys.snap(sys.to_adapted(st));
        Vec Xf = hamiltonian_adapted(sys, f, ad);
        Mat om = sys.omega(ad);
        Mat Pbar = sys.projector_Pbar(ad).P;
        // X_{E_L} solved from its own differential, then projected.
        Vec XE = solve_dense(Mat(om.transpose()), sys.dE(ad));
        double br = (Pbar * Xf).dot(om * (Pbar * XE));
        rep.max_residual = std::max(rep.max_residual, std::abs(fdot[i] - br));
    }
    return rep;
}

EvolutionReport evolution_residual(const NonlinearNHSystem& sys, const Observable& f,
                                   const Trajectory& traj) {
    EvolutionReport rep;
    std::vector<double> fv(traj.size());
    for (size_t i = 0; i < traj.size(); ++i) fv[i] = f(traj.states[i]);
    std::vector<double> fdot = series_derivative(traj.times, fv);
    for (size_t i = 2; i + 2 < traj.size(); ++i) {
        const State& st = traj.states[i];
        Mat om = sys.omega(st);
        Vec df = observable_differential(sys.chart(), f, st, sys.lagrangian().fd);
        Vec Xf = solve_dense(Mat(om.transpose()), df);
        Vec XE = solve_dense(Mat(om.transpose()), sys.dE(st));
        Mat Pbar = sys.projector_Pbar(st);
        double br = (Pbar * Xf).dot(om * (Pbar * XE));
        Vec R = sys.reactive_section(st);
        double reactive = df.head(sys.m()).dot(R.head(sys.m())) + df.tail(sys.m()).dot(R.tail(sys.m()));
        rep.max_reactive = std::max(rep.max_reactive, std::abs(reactive));
        rep.max_residual = std::max(rep.max_residual, std::abs(fdot[i] - reactive - br));
    }
    return rep;
}

} // namespace almech
