#include "almech/numerics.hpp"

#include <cmath>

namespace almech {

namespace {

double checked(double v, const char* where) {
    if (!std::isfinite(v)) throw NonFiniteEvaluation(std::string("non-finite stencil value in ") + where);
    return v;
}

// One-step central difference along coordinate i.
double central2_1d(const std::function<double(const Vec&)>& f, const Vec& at, int i, double h) {
    Vec p = at, q = at;
    p[i] += h;
    q[i] -= h;
    return (checked(f(p), "central2") - checked(f(q), "central2")) / (2.0 * h);
}

} // namespace

Vec fd_gradient_raw(const std::function<double(const Vec&)>& f, const Vec& at,
                    double step, FDScheme scheme) {
    const int k = static_cast<int>(at.size());
    Vec g(k);
    for (int i = 0; i < k; ++i) {
        if (scheme == FDScheme::central2) {
            g[i] = central2_1d(f, at, i, step);
        } else {
            // central4: halve the step twice, Richardson-extrapolate twice.
            const double d1 = central2_1d(f, at, i, step);
            const double d2 = central2_1d(f, at, i, step / 2.0);
            const double d3 = central2_1d(f, at, i, step / 4.0);
            const double r1 = (4.0 * d2 - d1) / 3.0;
            const double r2 = (4.0 * d3 - d2) / 3.0;
            g[i] = (16.0 * r2 - r1) / 15.0;
        }
    }
    return g;
}

Vec fd_gradient(const ScalarField& f, const Vec& x, const Vec& y, const FDConfig& cfg) {
    cfg.validate();
    if (f.has_grad()) {
        Vec g = f.analytic_grad(x, y);
        if (!all_finite(g)) throw NonFiniteEvaluation("analytic gradient is non-finite");
        return g;
    }
    Vec g(x.size() + y.size());
    auto fx = [&](const Vec& xx) { return f.eval(xx, y); };
    auto fy = [&](const Vec& yy) { return f.eval(x, yy); };
    if (x.size() > 0) g.head(x.size()) = fd_gradient_raw(fx, x, cfg.step_base, cfg.scheme);
    if (y.size() > 0) g.tail(y.size()) = fd_gradient_raw(fy, y, cfg.step_fiber, cfg.scheme);
    return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, double step, FDScheme scheme) {
    const int n = static_cast<int>(at.size());
    Vec probe = f(at);
    const int k = static_cast<int>(probe.size());
    Mat J(k, n);
    auto col2 = [&](int i, double h) -> Vec {
        Vec p = at, q = at;
        p[i] += h;
        q[i] -= h;
        Vec vp = f(p), vq = f(q);
        if (!all_finite(vp) || !all_finite(vq)) throw NonFiniteEvaluation("non-finite value in fd_jacobian");
        return (vp - vq) / (2.0 * h);
    };
    for (int i = 0; i < n; ++i) {
        if (scheme == FDScheme::central2) {
            J.col(i) = col2(i, step);
        } else {
            Vec d1 = col2(i, step), d2 = col2(i, step / 2.0), d3 = col2(i, step / 4.0);
            Vec r1 = (4.0 * d2 - d1) / 3.0, r2 = (4.0 * d3 - d2) / 3.0;
            J.col(i) = (16.0 * r2 - r1) / 15.0;
        }
    }
    return J;
}

Mat fd_matrix_directional(const std::function<Mat(const Vec&)>& f, const Vec& at,
                          const Vec& v, double step) {
    double vn = v.norm();
    if (vn == 0.0) {
        Mat z = f(at);
        return Mat::Zero(z.rows(), z.cols());
    }
    Vec u = v / vn;
    const double h = std::max(step, 1e-3);
    auto central = [&](double hh) -> Mat {
        Mat p = f(at + hh * u), q = f(at - hh * u);
        if (!all_finite(p) || !all_finite(q))
            throw NonFiniteEvaluation("non-finite value in fd_matrix_directional");
        return (p - q) / (2.0 * hh);
    };
    Mat d1 = central(h), d2 = central(h / 2.0);
    return (4.0 * d2 - d1) / 3.0 * vn;
}

Mat fd_hessian_block(const std::function<double(const Vec&, const Vec&)>& f,
                     const Vec& u, const Vec& v, bool same_block_uu, bool same_block_vv,
                     double step_u, double step_v) {
    // Mixed second derivatives by Richardson-extrapolated cross differences.
    // The pure-diagonal case uses the 5-point fourth-order stencil.
    const int nu = static_cast<int>(u.size());
    const int nv = static_cast<int>(v.size());
    Mat H(nu, nv);
    auto eval = [&](const Vec& uu, const Vec& vv) { return checked(f(uu, vv), "fd_hessian_block"); };
    auto cross = [&](int i, int j, double hu, double hv) {
        Vec up = u, um = u;
        up[i] += hu;
        um[i] -= hu;
        Vec vp = v, vm = v;
        vp[j] += hv;
        vm[j] -= hv;
        return (eval(up, vp) - eval(up, vm) - eval(um, vp) + eval(um, vm)) / (4.0 * hu * hv);
    };
    auto diag = [&](int i, double h, bool on_u) {
        auto shift = [&](double s) {
            Vec uu = u, vv = v;
            (on_u ? uu[i] : vv[i]) += s;
            return eval(uu, vv);
        };
        const double f0 = shift(0.0);
        return (-shift(2 * h) + 16 * shift(h) - 30 * f0 + 16 * shift(-h) - shift(-2 * h)) / (12.0 * h * h);
    };
    const bool diagonal_case = same_block_uu && same_block_vv;
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            if (diagonal_case && i == j) {
                H(i, j) = diag(i, step_u, true);
            } else {
                const double m1 = cross(i, j, step_u, step_v);
                const double m2 = cross(i, j, step_u / 2.0, step_v / 2.0);
                H(i, j) = (4.0 * m2 - m1) / 3.0;
            }
        }
    }
    return H;
}

double rcond_estimate(const Mat& A) {
    if (A.rows() == 0) return 1.0;
    Eigen::FullPivLU<Mat> lu(A);
    Mat U = lu.matrixLU().triangularView<Eigen::Upper>();
    double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < U.rows() && i < U.cols(); ++i) {
        double p = std::abs(U(i, i));
        pmax = std::max(pmax, p);
        pmin = std::min(pmin, p);
    }
    if (pmax == 0.0) return 0.0;
    return pmin / pmax;
}

Vec solve_dense(const Mat& A, const Vec& b, double tol_det) {
    if (A.rows() != A.cols()) throw InvalidParameters("solve_dense: matrix must be square");
    if (A.rows() == 0) return Vec(0);
    Eigen::FullPivLU<Mat> lu(A);
    Mat U = lu.matrixLU().triangularView<Eigen::Upper>();
    double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < A.rows(); ++i) {
        double p = std::abs(U(i, i));
        pmax = std::max(pmax, p);
        pmin = std::min(pmin, p);
    }
    if (pmax == 0.0 || pmin / pmax < tol_det)
        throw SingularMatrix("solve_dense: reciprocal condition estimate below threshold");
    return lu.solve(b);
}

Mat solve_dense(const Mat& A, const Mat& B, double tol_det) {
    Mat out(A.rows(), B.cols());
    for (int j = 0; j < B.cols(); ++j) out.col(j) = solve_dense(A, Vec(B.col(j)), tol_det);
    return out;
}

Mat nullspace(const Mat& A, double rank_tol) {
    const int m = static_cast<int>(A.cols());
    if (A.rows() == 0) return Mat::Identity(m, m);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > rank_tol * std::max(smax, 1.0)) ++rank;
    const int k = m - rank;
    Mat V = svd.matrixV();
    return V.rightCols(k);
}

double validate_scalar_field(const ScalarField& f, const std::vector<std::pair<Vec, Vec>>& pts,
                             const FDConfig& cfg) {
    double worst = 0.0;
    for (const auto& [x, y] : pts) {
        double a = f(x, y), b = f(x, y);
        if (a != b) throw Error("ScalarField evaluation is not deterministic");
        if (!f.has_grad()) continue;
        Vec ga = f.analytic_grad(x, y);
        ScalarField fd_only{f.n_base, f.n_fiber, f.eval, nullptr};
        Vec gn = fd_gradient(fd_only, x, y, cfg);
        double scale = std::max(1.0, std::max(ga.norm(), gn.norm()));
        worst = std::max(worst, (ga - gn).norm() / scale);
    }
    return worst;
}

} // namespace almech
