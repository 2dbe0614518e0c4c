#include "almech/nonlinear.hpp"

#include <cmath>

namespace almech {

NonlinearNHSystem::NonlinearNHSystem(std::shared_ptr<const AlgebroidChart> chart, LagrangianField Lf,
                                     std::vector<ScalarField> phi, double on_tol)
    : chart_(std::move(chart)), Lf_(std::move(Lf)), phi_(std::move(phi)), on_tol_(on_tol) {
    if (phi_.empty() && chart_->m == 0) throw InvalidParameters("empty system");
}

Vec NonlinearNHSystem::phi_values(const State& st) const {
    Vec v(s());
    for (int A = 0; A < s(); ++A) v[A] = phi_[A](st.x, st.y);
    return v;
}

void NonlinearNHSystem::require_on_constraint(const State& st) const {
    Vec v = phi_values(st);
    if (v.size() > 0 && v.cwiseAbs().maxCoeff() > on_tol_)
        throw OffConstraint("state violates phi = 0 beyond tolerance");
}

Mat NonlinearNHSystem::phi_fiber_jacobian(const State& st) const {
    Mat J(s(), m());
    for (int A = 0; A < s(); ++A) {
        Vec g = fd_gradient(phi_[A], st.x, st.y, Lf_.fd);
        J.row(A) = g.tail(m()).transpose();
    }
    return J;
}

Mat NonlinearNHSystem::phi_differentials(const State& st) const {
    Mat D(s(), 2 * m());
    Mat rho = chart_->rho(st.x);
    for (int A = 0; A < s(); ++A) {
        Vec g = fd_gradient(phi_[A], st.x, st.y, Lf_.fd);
        Vec dx = chart_->n > 0 ? Vec(rho.transpose() * g.head(chart_->n)) : Vec::Zero(m());
        D.row(A).head(m()) = dx.transpose();
        D.row(A).tail(m()) = g.tail(m()).transpose();
    }
    return D;
}

Mat NonlinearNHSystem::virtual_displacements(const State& st) const {
    require_on_constraint(st);
    return virtual_displacements_impl(st);
}

Mat NonlinearNHSystem::virtual_displacements_impl(const State& st) const {
    Mat J = phi_fiber_jacobian(st);
    if (s() > 0) {
        Eigen::JacobiSVD<Mat> svd(J);
        const Vec& sv = svd.singularValues();
        if (sv.size() < s() || sv[s() - 1] <= 1e-10 * std::max(1.0, sv[0]))
            throw RankDeficientConstraint("d(phi)/dy lost row rank at state");
    }
    return nullspace(J);
}

Mat NonlinearNHSystem::regularity_matrix(const State& st) const {
    Mat J = phi_fiber_jacobian(st);
    Mat W = Lf_.derivatives(st).W;
    Mat Winv_Jt;
    try {
        Winv_Jt = solve_dense(W, Mat(J.transpose()));
    } catch (const SingularMatrix&) {
        throw SingularMatrix("regularity_matrix_nl: W singular (Lagrangian not regular)");
    }
    Mat C = J * Winv_Jt;
    return 0.5 * (C + C.transpose());
}

Mat NonlinearNHSystem::Z(const State& st) const {
    Mat J = phi_fiber_jacobian(st);
    Mat W = Lf_.derivatives(st).W;
    Mat cols = Mat::Zero(2 * m(), s());
    Mat Winv_Jt = solve_dense(W, Mat(J.transpose())); // m x s
    cols.bottomRows(m()) = -Winv_Jt;
    return cols;
}

Mat NonlinearNHSystem::omega(const State& st) const { return cartan_two_form(Lf_, st); }

Vec NonlinearNHSystem::dE(const State& st) const { return energy_differential(Lf_, st); }

Vec NonlinearNHSystem::free_section(const State& st) const {
    Dynamics d = free_dynamics(Lf_, st);
    Vec g(2 * m());
    g.head(m()) = st.y;
    g.tail(m()) = d.ydot;
    return g;
}

NonlinearNHSystem::NLResult NonlinearNHSystem::solve_ld(const State& st) const {
    require_on_constraint(st);
    return solve_ld_impl(st);
}

Dynamics NonlinearNHSystem::dynamics_extended(const State& st) const {
    return solve_ld_impl(st).dynamics;
}

NonlinearNHSystem::NLResult NonlinearNHSystem::solve_ld_impl(const State& st) const {
    Vec gammaL = free_section(st);
    Mat D = phi_differentials(st); // s x 2m
    Mat Zc = Z(st);
    Mat C = regularity_matrix(st);
    // dphi^B(Gamma_L + lambda^A Z_A) = 0 with dphi^B(Z_A) = -C^{AB}.
    Vec rhs = D * gammaL;
    Vec lambda;
    try {
        lambda = solve_dense(C, rhs);
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("C^{AB} singular at state");
    }
    Vec gamma = gammaL + Zc * lambda;
    NLResult res;
    res.lambda = lambda;
    res.dynamics.xdot = chart_->rho(st.x) * st.y;
    res.dynamics.ydot = gamma.tail(m());
    return res;
}

double NonlinearNHSystem::energy_drift(const State& st) const {
    NLResult r = solve_ld(st);
    Mat J = phi_fiber_jacobian(st);
    // d_Gamma E_L = -lambda^A dphi^A(Delta), Delta the Liouville section.
    return -r.lambda.dot(J * st.y);
}

Vec NonlinearNHSystem::constrained_section(const State& st) const {
    NLResult r = solve_ld(st);
    Vec g(2 * m());
    g.head(m()) = st.y;
    g.tail(m()) = r.dynamics.ydot;
    return g;
}

Mat NonlinearNHSystem::tvm_basis(const State& st) const {
    const int mm = m();
    Mat V = virtual_displacements_impl(st); // m x r
    const int r = static_cast<int>(V.cols());
    Mat D = phi_differentials(st);
    Mat Dx = D.leftCols(mm); // action on comp_X
    Mat Dy = D.rightCols(mm);
    Mat U = Mat::Zero(2 * mm, 2 * r);
    // Horizontal legs (v_a, c_a): dphi(v_a, c_a) = 0 with minimal-norm c_a.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Dy);
    for (int a = 0; a < r; ++a) {
        Vec v = V.col(a);
        Vec rhs = -Dx * v;
        Vec c = cod.solve(rhs);
        U.col(a).head(mm) = v;
        U.col(a).tail(mm) = c;
        U.col(r + a).tail(mm) = v; // vertical legs
    }
    return U;
}

Mat NonlinearNHSystem::projector_Pbar(const State& st) const {
    Mat U = tvm_basis(st);
    Mat om = omega(st);
    Mat A = U.transpose() * om.transpose() * U;
    Mat rhsM = U.transpose() * om.transpose(); // x -> U^T om^T x
    Mat coeffs;
    try {
        coeffs = solve_dense(A, rhsM);
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("T^V M is not symplectic at state (system not regular)");
    }
    return U * coeffs;
}

Vec NonlinearNHSystem::constrained_section_Pbar(const State& st) const {
    return projector_Pbar(st) * free_section(st);
}

Vec NonlinearNHSystem::constrained_section_distributional(const State& st) const {
    Mat U = tvm_basis(st);
    Mat om = omega(st);
    Mat A = U.transpose() * om.transpose() * U;
    Vec rhs = U.transpose() * dE(st);
    Vec eta;
    try {
        eta = solve_dense(A, rhs);
    } catch (const SingularMatrix&) {
        throw SingularConstrainedSystem("restricted form omega^{L,M} singular at state");
    }
    return U * eta;
}

Vec NonlinearNHSystem::reactive_section(const State& st) const {
    return constrained_section(st) - constrained_section_Pbar(st);
}

State NonlinearNHSystem::project_onto_constraint(const State& st, double tol, int max_iter) const {
    State out = st;
    for (int it = 0; it < max_iter; ++it) {
        Vec v = phi_values(out);
        if (v.size() == 0 || v.cwiseAbs().maxCoeff() <= tol) return out;
        Mat J = phi_fiber_jacobian(out);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
        out.y -= cod.solve(v);
    }
    return out;
}

} // namespace almech
