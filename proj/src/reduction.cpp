#include "almech/reduction.hpp"

#include <cmath>

#include "almech/simulate.hpp"

namespace almech {

MorphismSpec identity_morphism(std::shared_ptr<const AlgebroidChart> chart) {
    MorphismSpec mor;
    mor.source = chart;
    mor.target = chart;
    mor.base_map = [](const Vec& x) { return x; };
    mor.fiber_map = [m = chart->m](const Vec&) { return Mat::Identity(m, m); };
    return mor;
}

MorphismReport check_admissible(const MorphismSpec& mor, const std::vector<Vec>& points, double tol) {
    MorphismReport rep;
    for (const Vec& x : points) {
        Mat rho = mor.source->rho(x);
        Mat Phi = mor.Phi(x);
        Vec xp = mor.phi(x);
        Mat rho2 = mor.target->rho(xp);
        Mat Dphi = mor.source->n > 0 && mor.target->n > 0
                       ? fd_jacobian(mor.base_map, x, mor.source->fd.step_base, mor.source->fd.scheme)
                       : Mat::Zero(mor.target->n, mor.source->n);
        Mat res = rho2 * Phi;
        if (mor.source->n > 0 && mor.target->n > 0) res -= Dphi * rho;
        if (res.size() > 0)
            rep.max_residual = std::max(rep.max_residual, res.cwiseAbs().maxCoeff());
    }
    rep.pass = rep.max_residual <= tol;
    return rep;
}

MorphismReport check_morphism(const MorphismSpec& mor, const std::vector<Vec>& points, double tol) {
    MorphismReport rep;
    const int m = mor.source->m;
    const int m2 = mor.target->m;
    for (const Vec& x : points) {
        Mat rho = mor.source->rho(x);
        Mat Phi = mor.Phi(x);
        Tensor3 C = mor.source->C(x);
        Tensor3 C2 = mor.target->C(mor.phi(x));
        std::vector<Mat> dPhi(m); // derivative of Phi along rho(e_alpha)
        for (int a = 0; a < m; ++a)
            dPhi[a] = mor.source->n > 0
                          ? fd_matrix_directional(mor.fiber_map, x, Vec(rho.col(a)),
                                                  mor.source->fd.step_base)
                          : Mat::Zero(m2, m);
        for (int a = 0; a < m; ++a) {
            for (int dd = 0; dd < m; ++dd) {
                for (int b = 0; b < m2; ++b) {
                    double lhs = 0.0;
                    for (int g = 0; g < m; ++g) lhs += Phi(b, g) * C[g](a, dd);
                    double rhs = dPhi[a](b, dd) - dPhi[dd](b, a);
                    for (int t = 0; t < m2; ++t)
                        for (int ss = 0; ss < m2; ++ss) rhs += C2[b](t, ss) * Phi(t, a) * Phi(ss, dd);
                    rep.max_residual = std::max(rep.max_residual, std::abs(lhs - rhs));
                }
            }
        }
    }
    rep.pass = rep.max_residual <= tol;
    return rep;
}

ProlongationVector push_prolongation(const MorphismSpec& mor, const ProlongationVector& z) {
    const Vec& x = z.base_state.x;
    Mat Phi = mor.Phi(x);
    Vec xdot_dir = mor.source->rho(x) * z.comp_X;
    Mat dPhi = mor.source->n > 0
                   ? fd_matrix_directional(mor.fiber_map, x, xdot_dir, mor.source->fd.step_base)
                   : Mat::Zero(mor.target->m, mor.source->m);
    ProlongationVector out;
    out.base_state = mor.apply(z.base_state);
    out.comp_X = Phi * z.comp_X;
    out.comp_V = dPhi * z.base_state.y + Phi * z.comp_V;
    return out;
}

MorphismSpec compose(const MorphismSpec& morAB, const MorphismSpec& morBC) {
    if (morAB.target->n != morBC.source->n || morAB.target->m != morBC.source->m)
        throw ChartMismatch("compose: target of first morphism does not match source of second");
    MorphismSpec out;
    out.source = morAB.source;
    out.target = morBC.target;
    auto phi1 = morAB.base_map, phi2 = morBC.base_map;
    auto f1 = morAB.fiber_map, f2 = morBC.fiber_map;
    out.base_map = [phi1, phi2](const Vec& x) { return phi2(phi1(x)); };
    out.fiber_map = [phi1, f1, f2](const Vec& x) -> Mat { return f2(phi1(x)) * f1(x); };
    return out;
}

namespace {

void require_lagrangian_match(const LagrangianField& L, const LagrangianField& L2,
                              const MorphismSpec& mor, const std::vector<State>& samples) {
    for (const State& s : samples) {
        State t = mor.apply(s);
        double a = L.value(s), b = L2.value(t);
        if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a)))
            throw PreconditionFailed("verify_reduction: L != L' o Phi at a sampled state");
    }
}

void require_fiberwise_surjective(const MorphismSpec& mor, const std::vector<State>& samples) {
    for (const State& s : samples) {
        Mat Phi = mor.Phi(s.x);
        Eigen::JacobiSVD<Mat> svd(Phi);
        const Vec& sv = svd.singularValues();
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > 1e-10 * std::max(1.0, sv[0])) ++rank;
        if (rank < mor.target->m)
            throw PreconditionFailed("verify_reduction: Phi is not fiberwise surjective");
    }
}

// Columns of the image must lie in the span of the target columns.
void require_subspace_map(const Mat& image, const Mat& target_span, const char* what) {
    if (target_span.cols() == 0) {
        if (image.cwiseAbs().maxCoeff() > 1e-8)
            throw PreconditionFailed(std::string("verify_reduction: ") + what);
        return;
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(target_span);
    Mat resid = image - target_span * cod.solve(image);
    if (resid.size() > 0 && resid.cwiseAbs().maxCoeff() > 1e-8)
        throw PreconditionFailed(std::string("verify_reduction: ") + what);
}

ReductionReport compare_trajectories(const MorphismSpec& mor, const Trajectory& up,
                                     const Trajectory& down, const LagrangianField& L,
                                     const LagrangianField& L2, double tol) {
    ReductionReport rep;
    for (size_t i = 0; i < up.size() && i < down.size(); ++i) {
        State pushed = mor.apply(up.states[i]);
        const State& tgt = down.states[i];
        double dev = (pushed.y - tgt.y).cwiseAbs().maxCoeff();
        if (pushed.x.size() > 0) dev = std::max(dev, (pushed.x - tgt.x).cwiseAbs().maxCoeff());
        rep.max_state_deviation = std::max(rep.max_state_deviation, dev);
        double eup = energy(L, up.states[i]);
        double edown = energy(L2, pushed);
        rep.max_energy_mismatch = std::max(rep.max_energy_mismatch, std::abs(eup - edown));
    }
    rep.pass = rep.max_state_deviation <= tol;
    return rep;
}

} // namespace

ReductionReport verify_reduction(const LinearNHSystem& sysE, const LinearNHSystem& sysE2,
                                 const MorphismSpec& mor, const State& start,
                                 const IntegratorConfig& cfg, double tol, std::mt19937_64& rng) {
    std::vector<State> samples;
    for (int i = 0; i < 20; ++i) samples.push_back(random_on_constraint(sysE, start, 0.3, rng));
    require_lagrangian_match(sysE.lagrangian(), sysE2.lagrangian(), mor, samples);
    require_fiberwise_surjective(mor, samples);
    for (const State& s : samples) {
        Mat B = sysE.frame().B(s.x);
        Mat B2 = sysE2.frame().B(mor.phi(s.x));
        require_subspace_map(Mat(mor.Phi(s.x) * B.leftCols(sysE.r())),
                             Mat(B2.leftCols(sysE2.r())), "Phi(D) not contained in D'");
    }
    Trajectory up = integrate_constrained(sysE, start, cfg);
    Trajectory down = integrate_constrained(sysE2, mor.apply(start), cfg);
    return compare_trajectories(mor, up, down, sysE.lagrangian(), sysE2.lagrangian(), tol);
}

ReductionReport verify_reduction(const NonlinearNHSystem& sysE, const NonlinearNHSystem& sysE2,
                                 const MorphismSpec& mor, const State& start,
                                 const IntegratorConfig& cfg, double tol, std::mt19937_64& rng) {
    std::vector<State> samples;
    for (int i = 0; i < 20; ++i) samples.push_back(random_on_constraint(sysE, start, 0.3, rng));
    require_lagrangian_match(sysE.lagrangian(), sysE2.lagrangian(), mor, samples);
    require_fiberwise_surjective(mor, samples);
    for (const State& s : samples) {
        State t = mor.apply(s);
        Vec v2 = sysE2.phi_values(t);
        if (v2.size() > 0 && v2.cwiseAbs().maxCoeff() > 1e-7)
            throw PreconditionFailed("verify_reduction: Phi(M) not contained in M'");
        require_subspace_map(Mat(mor.Phi(s.x) * sysE.virtual_displacements(s)),
                             sysE2.virtual_displacements(t), "Phi(V) != V'");
    }
    Trajectory up = integrate_constrained(sysE, start, cfg);
    Trajectory down = integrate_constrained(sysE2, mor.apply(start), cfg);
    return compare_trajectories(mor, up, down, sysE.lagrangian(), sysE2.lagrangian(), tol);
}

Observable pullback_observable(const MorphismSpec& mor, const Observable& f2) {
    Observable o;
    o.label = f2.label + " o Phi";
    o.f.n_base = mor.source->n;
    o.f.n_fiber = mor.source->m;
    auto base = mor.base_map;
    auto fib = mor.fiber_map;
    auto inner = f2.f.eval;
    o.f.eval = [base, fib, inner](const Vec& x, const Vec& y) {
        return inner(base(x), fib(x) * y);
    };
    return o;
}

double verify_bracket_morphism(const NonlinearNHSystem& sysE, const NonlinearNHSystem& sysE2,
                               const MorphismSpec& mor, const Observable& f2, const Observable& g2,
                               const std::vector<State>& states) {
    Observable fp = pullback_observable(mor, f2);
    Observable gp = pullback_observable(mor, g2);
    double worst = 0.0;
    for (const State& s : states) {
        double lhs = nh_bracket(sysE, fp, gp, s);
        double rhs = nh_bracket(sysE2, f2, g2, mor.apply(s));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

ChaplyginReduced chaplygin_reduce(const LinearNHSystem& sys) {
    const int n = sys.chart().n, rr = sys.r(), m = sys.m();
    if (rr != n) throw NotChaplyginType("chaplygin_reduce: rank of D must equal dim M");
    auto sptr = std::make_shared<LinearNHSystem>(sys);

    // h(x): TM -> D, H(x) = B_D(x) A(x)^{-1} with A = rho B_D.
    auto Hmat = [sptr](const Vec& x) -> Mat {
        Mat BD = sptr->frame().B(x).leftCols(sptr->r());
        Mat A = sptr->chart().rho(x) * BD;
        if (rcond_estimate(A) < 1e-12)
            throw NotChaplyginType("chaplygin_reduce: rho restricted to D is singular");
        return Mat(BD * A.inverse());
    };
    (void)m;

    ChaplyginReduced red;
    auto tm = std::make_shared<AlgebroidChart>(tangent_bundle_chart(n, sys.chart().x_labels));
    tm->fd = sys.chart().fd;
    red.tm_chart = tm;

    if (sys.is_mechanical()) {
        auto mbar = std::make_shared<MetricField>();
        auto baseG = sys.lagrangian().metric;
        mbar->G = [Hmat, baseG](const Vec& x) -> Mat {
            Mat H = Hmat(x);
            return H.transpose() * baseG->G(x) * H;
        };
        mbar->V = baseG->V;
        red.Lbar = mechanical_lagrangian(tm, mbar, sys.lagrangian().fd);
    } else {
        LagrangianField Lb;
        Lb.chart = tm;
        Lb.fd = sys.lagrangian().fd;
        Lb.L.n_base = n;
        Lb.L.n_fiber = n;
        auto inner = sys.lagrangian().L.eval;
        Lb.L.eval = [Hmat, inner](const Vec& x, const Vec& v) { return inner(x, Hmat(x) * v); };
        red.Lbar = Lb;
    }

    red.h = [Hmat](const State& s) -> Vec { return Hmat(s.x) * s.y; };

    red.jk_form = [sptr, Hmat](const State& s) -> Vec {
        const int n = sptr->chart().n;
        Vec p = sptr->lagrangian().grad_y({s.x, Hmat(s.x) * s.y});
        Vec jk(n);
        for (int j = 0; j < n; ++j) {
            Vec K = Vec::Zero(sptr->m());
            for (int i = 0; i < n; ++i) {
                if (s.y[i] == 0.0) continue;
                SectionField hi{[Hmat, i](const Vec& xx) -> Vec { return Hmat(xx).col(i); }, nullptr};
                SectionField hj{[Hmat, j](const Vec& xx) -> Vec { return Hmat(xx).col(j); }, nullptr};
                K += s.y[i] * bracket_sections(sptr->chart(), hi, hj, s.x);
            }
            jk[j] = p.dot(K);
        }
        return jk;
    };

    LagrangianField Lbar = red.Lbar;
    auto jk = red.jk_form;
    red.reduced_dynamics = [Lbar, jk](const State& s) -> Dynamics {
        auto d = Lbar.derivatives(s);
        Vec b = d.grad_x - d.hess_xy.transpose() * s.y + jk(s);
        Vec f = solve_dense(d.W, b);
        return {s.y, f};
    };
    return red;
}

Vec momentum(const LagrangianField& Lf, const MomentumBundle& mb, const State& s) {
    return mb.Psi(s.x).transpose() * Lf.grad_y(s);
}

double momentum_scalar(const LagrangianField& Lf, const MomentumBundle& mb,
                       const SectionField& sigma, const State& s) {
    return momentum(Lf, mb, s).dot(sigma(s.x));
}

double momentum_equation_rhs(const LagrangianField& Lf, const MomentumBundle& mb,
                             const SectionField& sigma, const State& s) {
    auto Psi = mb.Psi;
    auto sig = sigma;
    SectionField eta;
    eta.eval = [Psi, sig](const Vec& x) -> Vec { return Psi(x) * sig(x); };
    ProlongationVector lift = complete_lift(*Lf.chart, eta, s);
    Vec gx = Lf.grad_x(s);
    Vec gy = Lf.grad_y(s);
    double out = gy.dot(lift.comp_V);
    if (Lf.chart->n > 0) out += gx.dot(Lf.chart->rho(s.x) * lift.comp_X);
    return out;
}

MomentumReport momentum_equation_residual(const LagrangianField& Lf, const MomentumBundle& mb,
                                          const SectionField& sigma, const Trajectory& traj,
                                          const LinearNHSystem* check_in_d) {
    MomentumReport rep;
    std::vector<double> J(traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        const State& s = traj.states[i];
        if (check_in_d) {
            Vec img = mb.Psi(s.x) * sigma(s.x);
            State ad = check_in_d->to_adapted({s.x, img});
            for (int A = check_in_d->r(); A < check_in_d->m(); ++A)
                if (std::abs(ad.y[A]) > 1e-9)
                    throw SectionNotInKD("momentum section leaves K^D along the trajectory");
        }
        J[i] = momentum_scalar(Lf, mb, sigma, s);
        rep.max_drift = std::max(rep.max_drift, std::abs(J[i] - J[0]));
    }
    std::vector<double> Jdot = series_derivative(traj.times, J);
    for (size_t i = 2; i + 2 < traj.size(); ++i) {
        double rhs = momentum_equation_rhs(Lf, mb, sigma, traj.states[i]);
        rep.max_residual = std::max(rep.max_residual, std::abs(Jdot[i] - rhs));
    }
    return rep;
}

double noether_function(const LagrangianField& Lf, const SectionField& sigma, const State& s,
                        const ScalarField* f_base) {
    double F = Lf.grad_y(s).dot(sigma(s.x));
    if (f_base && f_base->eval) F -= f_base->eval(s.x, Vec(0));
    return F;
}

} // namespace almech
