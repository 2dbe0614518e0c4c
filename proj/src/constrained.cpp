#include "almech/constrained.hpp"

#include <cmath>

namespace almech {

AdaptedFrame identity_frame(int m, int r) {
    AdaptedFrame f;
    f.r = r;
    f.B = [m](const Vec&) { return Mat::Identity(m, m); };
    f.analytic_dB_dir = nullptr;
    return f;
}

AdaptedFrame frame_from_annihilators(const std::function<Mat(const Vec&)>& covectors, int m) {
    AdaptedFrame f;
    f.B = [covectors, m](const Vec& x) {
        Mat A = covectors(x); // s x m rows are annihilator forms
        Mat ker = nullspace(A);
        Mat comp = nullspace(Mat(ker.transpose())); // orthogonal completion
        Mat B(m, m);
        B.leftCols(ker.cols()) = ker;
        B.rightCols(comp.cols()) = comp;
        return B;
    };
    // rank of D inferred at the origin-like probe happens at construction site.
    f.r = -1;
    return f;
}

namespace {

std::shared_ptr<const AlgebroidChart> build_adapted_chart(
    std::shared_ptr<const AlgebroidChart> base, const AdaptedFrame& frame) {
    auto ch = std::make_shared<AlgebroidChart>();
    ch->n = base->n;
    ch->m = base->m;
    ch->fd = base->fd;
    ch->x_labels = base->x_labels;
    for (int i = 0; i < base->m; ++i) ch->y_labels.push_back("ytil" + std::to_string(i + 1));
    auto B = frame.B;
    ch->anchor = [base, B](const Vec& x) -> Mat { return base->rho(x) * B(x); };
    FDConfig fd = base->fd;
    ch->structure = [base, B, fd](const Vec& x) -> Tensor3 {
        const int m = base->m;
        Mat Bx = B(x);
        Mat Binv = Bx.inverse();
        Tensor3 out(m, Mat::Zero(m, m));
        auto column_section = [B](int col) {
            SectionField s;
            s.eval = [B, col](const Vec& xx) -> Vec { return B(xx).col(col); };
            s.analytic_jacobian = [B, col](const Vec& xx) -> Mat {
                if (xx.size() == 0) return Mat::Zero(B(xx).rows(), 0);
                return fd_jacobian([B, col](const Vec& x2) -> Vec { return B(x2).col(col); }, xx,
                                   1e-3, FDScheme::central4);
            };
            return s;
        };
        for (int a = 0; a < m; ++a) {
            for (int b = a + 1; b < m; ++b) {
                SectionField sa = column_section(a);
                SectionField sb = column_section(b);
                Vec br = Binv * bracket_sections(*base, sa, sb, x);
                for (int g = 0; g < m; ++g) {
                    out[g](a, b) = br[g];
                    out[g](b, a) = -br[g];
                }
            }
        }
        return out;
    };
    return ch;
}

LagrangianField build_adapted_lagrangian(std::shared_ptr<const AlgebroidChart> adapted,
                                         const LagrangianField& Lf, const AdaptedFrame& frame) {
    if (Lf.metric) {
        auto tilted = std::make_shared<MetricField>();
        auto base_metric = Lf.metric;
        auto B = frame.B;
        tilted->G = [base_metric, B](const Vec& x) -> Mat {
            Mat Bx = B(x);
            return Bx.transpose() * base_metric->G(x) * Bx;
        };
        tilted->V = base_metric->V;
        return mechanical_lagrangian(adapted, tilted, Lf.fd);
    }
    LagrangianField out;
    out.chart = adapted;
    out.fd = Lf.fd;
    out.L.n_base = adapted->n;
    out.L.n_fiber = adapted->m;
    auto B = frame.B;
    auto base_eval = Lf.L.eval;
    out.L.eval = [B, base_eval](const Vec& x, const Vec& yt) {
        return base_eval(x, B(x) * yt);
    };
    if (Lf.L.has_grad()) {
        auto base_grad = Lf.L.analytic_grad;
        FDConfig fd = Lf.fd;
        int n = adapted->n, m = adapted->m;
        out.L.analytic_grad = [B, base_grad, fd, n, m](const Vec& x, const Vec& yt) -> Vec {
            Vec y = B(x) * yt;
            Vec g = base_grad(x, y);
            Vec out_g(n + m);
            Vec gy = g.tail(m);
            for (int i = 0; i < n; ++i) {
                Vec ei = Vec::Zero(n);
                ei[i] = 1.0;
                Mat dB = fd_matrix_directional(B, x, ei, fd.step_base);
                out_g[i] = g[i] + (dB * yt).dot(gy);
            }
            out_g.tail(m) = B(x).transpose() * gy;
            return out_g;
        };
    }
    return out;
}

} // namespace

LinearNHSystem::LinearNHSystem(std::shared_ptr<const AlgebroidChart> chart, LagrangianField Lf,
                               AdaptedFrame frame, double on_tol)
    : chart_(std::move(chart)), Lf_(std::move(Lf)), frame_(std::move(frame)), on_tol_(on_tol) {
    if (frame_.r < 0 || frame_.r > chart_->m) throw InvalidParameters("adapted frame rank out of range");
    adapted_ = build_adapted_chart(chart_, frame_);
    Lad_ = build_adapted_lagrangian(adapted_, Lf_, frame_);
}

State LinearNHSystem::to_adapted(const State& original) const {
    Mat B = frame_.B(original.x);
    if (std::abs(B.determinant()) <= 1e-10)
        throw SingularMatrix("adapted frame is singular at the base point");
    return {original.x, solve_dense(B, original.y)};
}

State LinearNHSystem::from_adapted(const State& adapted) const {
    return {adapted.x, frame_.B(adapted.x) * adapted.y};
}

State LinearNHSystem::snap(const State& adapted) const {
    State s = adapted;
    for (int A = frame_.r; A < chart_->m; ++A) {
        if (std::abs(s.y[A]) > on_tol_)
            throw OffConstraint("state violates y^A = 0 beyond tolerance");
        s.y[A] = 0.0;
    }
    return s;
}

Vec LinearNHSystem::fiber_rate_to_original(const Vec& x, const Vec& y_ad, const Vec& ydot_ad,
                                           const Vec& xdot) const {
    Mat B = frame_.B(x);
    Vec out = B * ydot_ad;
    if (chart_->n > 0) {
        Mat dB = frame_.analytic_dB_dir ? frame_.analytic_dB_dir(x, xdot)
                                        : fd_matrix_directional(frame_.B, x, xdot, chart_->fd.step_base);
        out += dB * y_ad;
    }
    return out;
}

Mat LinearNHSystem::regularity_matrix(const State& adapted) const {
    Mat W = Lad_.derivatives(adapted).W;
    Mat C = W.topLeftCorner(frame_.r, frame_.r);
    return 0.5 * (C + C.transpose());
}

Mat LinearNHSystem::omega(const State& adapted) const { return cartan_two_form(Lad_, adapted); }

Vec LinearNHSystem::dE(const State& adapted) const { return energy_differential(Lad_, adapted); }

Vec LinearNHSystem::free_section(const State& adapted) const {
    Dynamics d = free_dynamics(Lad_, adapted);
    Vec g(2 * chart_->m);
    g.head(chart_->m) = adapted.y;
    g.tail(chart_->m) = d.ydot;
    return g;
}

Dynamics LinearNHSystem::dynamics_adapted(const State& adapted) const {
    State ad = snap(adapted);
    const int m = chart_->m, rr = frame_.r;
    auto d = Lad_.derivatives(ad);
    Mat rho = adapted_->rho(ad.x);
    Tensor3 C = adapted_->C(ad.x);
    Vec b = Vec::Zero(m);
    if (chart_->n > 0) {
        b += rho.transpose() * d.grad_x;
        b -= d.hess_xy.transpose() * (rho * ad.y);
    }
    for (int g = 0; g < m; ++g) b -= d.grad_y[g] * (C[g] * ad.y);
    Mat Cab = 0.5 * (d.W.topLeftCorner(rr, rr) + d.W.topLeftCorner(rr, rr).transpose());
    Vec fa;
    try {
        fa = solve_dense(Cab, Vec(b.head(rr)));
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("regularity matrix C_ab singular at state");
    }
    Vec ydot = Vec::Zero(m);
    ydot.head(rr) = fa;
    return {rho * ad.y, ydot};
}

LinearNHSystem::LDResult LinearNHSystem::solve_ld(const State& original) const {
    State ad = snap(to_adapted(original));
    const int m = chart_->m, rr = frame_.r;
    auto d = Lad_.derivatives(ad);
    Mat rho = adapted_->rho(ad.x);
    Tensor3 C = adapted_->C(ad.x);

    Vec b = Vec::Zero(m);
    if (chart_->n > 0) {
        b += rho.transpose() * d.grad_x;
        b -= d.hess_xy.transpose() * (rho * ad.y);
    }
    for (int g = 0; g < m; ++g) b -= d.grad_y[g] * (C[g] * ad.y);

    Mat Cab = 0.5 * (d.W.topLeftCorner(rr, rr) + d.W.topLeftCorner(rr, rr).transpose());
    Vec fa;
    try {
        fa = solve_dense(Cab, Vec(b.head(rr)));
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("regularity matrix C_ab singular at state");
    }

    LDResult res;
    res.adapted = ad;
    res.ydot_adapted = Vec::Zero(m);
    res.ydot_adapted.head(rr) = fa;
    // lambda_A = b_A - W_{A b} f^b  (contraction of the LD residual with X_A).
    Vec Wf = d.W * res.ydot_adapted;
    res.lambda = b.tail(m - rr) - Wf.tail(m - rr);
    res.original.xdot = rho * ad.y;
    res.original.ydot = fiber_rate_to_original(ad.x, ad.y, res.ydot_adapted, res.original.xdot);
    return res;
}

LinearNHSystem::ProjectorPair LinearNHSystem::projector_Q(const State& adapted) const {
    const int m = chart_->m, rr = frame_.r, ss = m - rr;
    auto d = Lad_.derivatives(adapted);
    Mat Cab = 0.5 * (d.W.topLeftCorner(rr, rr) + d.W.topLeftCorner(rr, rr).transpose());
    Mat WAb = d.W.bottomLeftCorner(ss, rr); // W_{A b}
    Mat Qcoef;
    try {
        Qcoef = solve_dense(Cab, Mat(WAb.transpose())); // r x s: Q^a_A = C^{ab} W_{b A}
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("projector_Q: C_ab singular");
    }
    ProjectorPair pp;
    pp.Qcoef = Qcoef;
    pp.Z = Mat::Zero(2 * m, ss);
    for (int A = 0; A < ss; ++A) {
        pp.Z(m + rr + A, A) = 1.0;                       // V_A
        for (int a = 0; a < rr; ++a) pp.Z(m + a, A) = -Qcoef(a, A); // -Q^a_A V_a
    }
    // Q = Z_A (x) V^A : reads off the V_A coefficient.
    pp.Q = Mat::Zero(2 * m, 2 * m);
    for (int A = 0; A < ss; ++A) pp.Q.col(m + rr + A) = pp.Z.col(A);
    pp.P = Mat::Identity(2 * m, 2 * m) - pp.Q;
    pp.Y = Mat::Zero(2 * m, ss);
    return pp;
}

LinearNHSystem::ProjectorPair LinearNHSystem::projector_Pbar(const State& adapted) const {
    const int m = chart_->m, rr = frame_.r, ss = m - rr;
    ProjectorPair pp = projector_Q(adapted);
    Mat om = omega(adapted);
    Mat M = om.topLeftCorner(m, m);
    auto d = Lad_.derivatives(adapted);
    Mat Cab = 0.5 * (d.W.topLeftCorner(rr, rr) + d.W.topLeftCorner(rr, rr).transpose());

    // Y_A = X_A - Q^a_A X_a + Ccoef^{bc} (M_{A b} - M_{a b} Q^a_A) V_c.
    Mat Y = Mat::Zero(2 * m, ss);
    for (int A = 0; A < ss; ++A) {
        Y(rr + A, A) = 1.0;
        for (int a = 0; a < rr; ++a) Y(a, A) = -pp.Qcoef(a, A);
        Vec w(rr); // w_b = M_{A b} - sum_a M_{a b} Q^a_A
        for (int b = 0; b < rr; ++b) {
            double v = M(rr + A, b);
            for (int a = 0; a < rr; ++a) v -= M(a, b) * pp.Qcoef(a, A);
            w[b] = v;
        }
        Vec coef;
        try {
            coef = solve_dense(Cab, w); // coef_c = C^{bc} w_b (C symmetric)
        } catch (const SingularMatrix&) {
            throw SingularConstrainedSystem("projector_Pbar: C_ab singular");
        }
        for (int c = 0; c < rr; ++c) Y(m + c, A) += coef[c];
    }
    pp.Y = Y;
    Mat Qbar = Mat::Zero(2 * m, 2 * m);
    for (int A = 0; A < ss; ++A) {
        Qbar.col(m + rr + A) += pp.Z.col(A); // Z_A (x) V^A
        Qbar.col(rr + A) += Y.col(A);        // Y_A (x) X^A
    }
    pp.Q = Qbar;
    pp.P = Mat::Identity(2 * m, 2 * m) - Qbar;
    return pp;
}

Vec LinearNHSystem::constrained_section_P(const State& adapted) const {
    State ad = snap(adapted);
    return projector_Q(ad).P * free_section(ad);
}

Vec LinearNHSystem::constrained_section_Pbar(const State& adapted) const {
    State ad = snap(adapted);
    return projector_Pbar(ad).P * free_section(ad);
}

Mat LinearNHSystem::tdd_basis() const {
    const int m = chart_->m, rr = frame_.r;
    Mat U = Mat::Zero(2 * m, 2 * rr);
    for (int a = 0; a < rr; ++a) {
        U(a, a) = 1.0;          // X_a
        U(m + a, rr + a) = 1.0; // V_a
    }
    return U;
}

Vec LinearNHSystem::constrained_section_distributional(const State& adapted) const {
    State ad = snap(adapted);
    Mat om = omega(ad);
    Mat U = tdd_basis();
    Mat A = U.transpose() * om.transpose() * U;
    Vec rhs = U.transpose() * dE(ad);
    Vec eta;
    try {
        eta = solve_dense(A, rhs);
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("distributional form omega^{L,D} singular");
    }
    return U * eta;
}

Tensor3 constrained_connection_coeffs(const LinearNHSystem& sys, const Vec& x) {
    if (!sys.is_mechanical())
        throw InvalidParameters("constrained connection requires a mechanical-type system");
    const int m = sys.m(), rr = sys.r();
    const AlgebroidChart& ad = sys.adapted_chart();
    const MetricField& Gt = *sys.adapted_lagrangian().metric;
    FDConfig fd = sys.lagrangian().fd;

    Tensor3 Gamma = levi_civita_coeffs(ad, Gt, x, fd);

    auto Pmat = [&](const Vec& xx) -> Mat {
        Mat G = Gt.G(xx);
        G = 0.5 * (G + G.transpose());
        Mat P = Mat::Zero(m, m);
        P.topRows(rr) = solve_dense(Mat(G.topLeftCorner(rr, rr)), Mat(G.topRows(rr)));
        return P;
    };
    Mat P = Pmat(x);
    Mat Q = Mat::Identity(m, m) - P;
    Mat rho = ad.rho(x);

    Tensor3 out(m, Mat::Zero(m, m));
    for (int b = 0; b < m; ++b) {
        Mat dQ = sys.chart().n > 0
                     ? Mat(-fd_matrix_directional(Pmat, x, Vec(rho.col(b)), fd.step_base))
                     : Mat(Mat::Zero(m, m));
        for (int g = 0; g < m; ++g) {
            for (int a = 0; a < m; ++a) {
                double v = 0.0;
                for (int mu = 0; mu < m; ++mu) v += P(a, mu) * Gamma[mu](b, g);
                v += dQ(a, g);
                for (int mu = 0; mu < m; ++mu) v += Gamma[a](b, mu) * Q(mu, g);
                out[a](b, g) = v;
            }
        }
    }
    return out;
}

Vec constrained_spray(const LinearNHSystem& sys, const State& adapted) {
    Tensor3 Gc = constrained_connection_coeffs(sys, adapted.x);
    Vec ydot = connection_spray(Gc, adapted.y);
    const MetricField& Gt = *sys.adapted_lagrangian().metric;
    if (Gt.has_potential()) {
        Mat G = Gt.G(adapted.x);
        G = 0.5 * (G + G.transpose());
        Mat rho = sys.adapted_chart().rho(adapted.x);
        Vec gV = fd_gradient_raw([&](const Vec& xx) { return Gt.V.eval(xx, Vec(0)); }, adapted.x,
                                 sys.lagrangian().fd.step_base, sys.lagrangian().fd.scheme);
        Vec grad = solve_dense(G, Vec(rho.transpose() * gV));
        const int m = sys.m(), rr = sys.r();
        Mat P = Mat::Zero(m, m);
        P.topRows(rr) = solve_dense(Mat(G.topLeftCorner(rr, rr)), Mat(G.topRows(rr)));
        ydot -= P * grad;
    }
    return ydot;
}

RegularityCertificate certify_regular(const LinearNHSystem& sys,
                                      const std::function<State()>& sample_adapted, int count,
                                      double rcond_floor) {
    RegularityCertificate cert;
    cert.samples = count;
    cert.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
        State ad = sys.snap(sample_adapted());
        Mat C = sys.regularity_matrix(ad);
        cert.min_rcond = std::min(cert.min_rcond, rcond_estimate(C));
        Eigen::SelfAdjointEigenSolver<Mat> es(C);
        cert.min_eigenvalue = std::min(cert.min_eigenvalue, es.eigenvalues().minCoeff());
    }
    cert.pass = cert.min_rcond > rcond_floor;
    return cert;
}

} // namespace almech
