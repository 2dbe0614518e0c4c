#ifndef ALMECH_NONLINEAR_HPP
#define ALMECH_NONLINEAR_HPP

#include "almech/lagrangian.hpp"

namespace almech {

// Nonlinearly constrained system: constraint submanifold cut out by the
// functions phi^A(x, y) = 0, with d(phi)/dy of full row rank along it.
class NonlinearNHSystem {
public:
    NonlinearNHSystem(std::shared_ptr<const AlgebroidChart> chart, LagrangianField Lf,
                      std::vector<ScalarField> phi, double on_tol = 1e-9);

    const AlgebroidChart& chart() const { return *chart_; }
    std::shared_ptr<const AlgebroidChart> chart_ptr() const { return chart_; }
    const LagrangianField& lagrangian() const { return Lf_; }
    const std::vector<ScalarField>& phi() const { return phi_; }
    int s() const { return static_cast<int>(phi_.size()); }
    int m() const { return chart_->m; }
    double on_tol() const { return on_tol_; }

    Vec phi_values(const State& s) const;
    // Raises OffConstraint when any |phi^A| exceeds the tolerance.
    void require_on_constraint(const State& s) const;

    // d(phi^A) in the prolongation coframe: rows are (rho^T dphi/dx ; dphi/dy), 2m wide.
    Mat phi_differentials(const State& s) const; // s x 2m
    Mat phi_fiber_jacobian(const State& s) const; // s x m

    // Orthonormal basis of the virtual displacements ker d(phi)/dy, m x r.
    Mat virtual_displacements(const State& s) const;

    // C^{AB} = dphi^A/dy W^{-1} dphi^B/dy.
    Mat regularity_matrix(const State& s) const;

    struct NLResult {
        Dynamics dynamics;
        Vec lambda; // multipliers on the Chetaev sections Z_A
    };

    // Chetaev sections Z_A = -(dphi^A/dy) W^{ab} V_b as 2m columns.
    Mat Z(const State& s) const;

    // Gamma = (Gamma_L + lambda^A Z_A)|_M with dphi^B(Gamma) = 0.
    NLResult solve_ld(const State& s) const;
    Dynamics dynamics(const State& s) const { return solve_ld(s).dynamics; }
    // Smooth off-manifold extension of the same solve; integrator stage
    // states sit O(h^2) off M and must not be rejected.
    Dynamics dynamics_extended(const State& s) const;

    // Instantaneous dE_L/dt along the constrained flow.
    double energy_drift(const State& s) const;

    // --- prolongation machinery in the chart basis (X_1..X_m, V_1..V_m) ---
    Mat omega(const State& s) const;
    Vec dE(const State& s) const;
    Vec free_section(const State& s) const;
    Vec constrained_section(const State& s) const; // multiplier/P route, 2m

    // Basis of T^V M (2m x 2r): vertical lifts of virtual displacements plus
    // their horizontal completions inside T^E M.
    Mat tvm_basis(const State& s) const;

    // Symplectic projector onto T^V M along its omega_L-orthogonal.
    Mat projector_Pbar(const State& s) const;
    Vec constrained_section_Pbar(const State& s) const;
    Vec constrained_section_distributional(const State& s) const;

    // R_L = P(Gamma_L) - Pbar(Gamma_L); vanishes iff rho^1(Delta) is tangent to M.
    Vec reactive_section(const State& s) const;

    // Minimal-norm Newton correction of the fiber onto phi = 0.
    State project_onto_constraint(const State& s, double tol, int max_iter = 10) const;

private:
    NLResult solve_ld_impl(const State& s) const;
    Mat virtual_displacements_impl(const State& s) const;

    std::shared_ptr<const AlgebroidChart> chart_;
    LagrangianField Lf_;
    std::vector<ScalarField> phi_;
    double on_tol_;
};

} // namespace almech

#endif
