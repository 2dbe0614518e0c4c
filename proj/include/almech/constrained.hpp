#ifndef ALMECH_CONSTRAINED_HPP
#define ALMECH_CONSTRAINED_HPP

#include "almech/lagrangian.hpp"

namespace almech {

// Invertible frame field whose first r columns span the constraint subbundle D.
// Constraints read y^A = 0 in the frame coordinates, A = r..m-1.
struct AdaptedFrame {
    std::function<Mat(const Vec&)> B;
    int r = 0;
    // Optional directional derivative of B at x along a base direction.
    std::function<Mat(const Vec&, const Vec&)> analytic_dB_dir;
};

AdaptedFrame identity_frame(int m, int r);

// Builds an adapted frame from s annihilator covector fields by pointwise
// nullspace + completion. Pointwise SVD frames may be discontinuous across x;
// built-in systems always supply analytic frames instead.
AdaptedFrame frame_from_annihilators(const std::function<Mat(const Vec&)>& covectors, int m);

class LinearNHSystem {
public:
    LinearNHSystem(std::shared_ptr<const AlgebroidChart> chart, LagrangianField Lf,
                   AdaptedFrame frame, double on_tol = 1e-9);

    const AlgebroidChart& chart() const { return *chart_; }
    std::shared_ptr<const AlgebroidChart> chart_ptr() const { return chart_; }
    const AlgebroidChart& adapted_chart() const { return *adapted_; }
    std::shared_ptr<const AlgebroidChart> adapted_chart_ptr() const { return adapted_; }
    const LagrangianField& lagrangian() const { return Lf_; }
    const LagrangianField& adapted_lagrangian() const { return Lad_; }
    const AdaptedFrame& frame() const { return frame_; }
    int r() const { return frame_.r; }
    int s() const { return chart_->m - frame_.r; }
    int m() const { return chart_->m; }
    double on_tol() const { return on_tol_; }

    State to_adapted(const State& original) const;
    State from_adapted(const State& adapted) const;
    // Snaps |y^A| <= on_tol to zero; larger violations raise OffConstraint.
    State snap(const State& adapted) const;
    bool is_mechanical() const { return static_cast<bool>(Lf_.metric); }

    // Fiber velocity conversion back to the original frame along a base motion:
    // ydot = B ydot_ad + (d B / dt) y_ad with dB/dt taken along xdot.
    Vec fiber_rate_to_original(const Vec& x, const Vec& y_ad, const Vec& ydot_ad,
                               const Vec& xdot) const;

    struct LDResult {
        Dynamics original;  // xdot, ydot in the original frame
        State adapted;      // snapped adapted state
        Vec ydot_adapted;   // fiber acceleration, components A are exactly zero
        Vec lambda;         // constraint force components on e^A
    };

    // Lagrange-d'Alembert solve at an on-constraint state (original frame in/out).
    LDResult solve_ld(const State& original) const;
    Dynamics dynamics(const State& original) const { return solve_ld(original).original; }
    // Same solve with adapted-state input/output (y^A pinned to zero).
    Dynamics dynamics_adapted(const State& adapted) const;

    // --- adapted-basis machinery (prolongation coefficients ordered X_1..X_m,V_1..V_m) ---
    Mat regularity_matrix(const State& adapted) const; // C_ab, r x r
    Mat omega(const State& adapted) const;             // Cartan 2-section, 2m x 2m
    Vec dE(const State& adapted) const;                // energy differential, 2m
    Vec free_section(const State& adapted) const;      // Gamma_L coefficients, 2m

    struct ProjectorPair {
        Mat Q;     // 2m x 2m projector onto F (resp. (T^D D)-perp)
        Mat P;     // complement
        Mat Qcoef; // r x s matrix Q^a_A
        Mat Z;     // 2m x s columns Z_A
        Mat Y;     // 2m x s columns Y_A (only for the symplectic pair)
    };
    ProjectorPair projector_Q(const State& adapted) const;    // along T^E D
    ProjectorPair projector_Pbar(const State& adapted) const; // symplectic pair

    Vec constrained_section_P(const State& adapted) const;    // P(Gamma_L), 2m
    Vec constrained_section_Pbar(const State& adapted) const; // Pbar(Gamma_L), 2m
    Vec constrained_section_distributional(const State& adapted) const;

    // Basis of T^D D as a 2m x 2r selection, used by the distributional route.
    Mat tdd_basis() const;

private:
    std::shared_ptr<const AlgebroidChart> chart_;
    LagrangianField Lf_;
    AdaptedFrame frame_;
    double on_tol_;
    std::shared_ptr<const AlgebroidChart> adapted_;
    LagrangianField Lad_;
};

// Constrained-connection coefficients in the adapted frame (mechanical systems):
// nabla-check_sigma eta = P(nabla_sigma eta) + nabla_sigma(Q eta) with the
// G-orthogonal projectors of E = D (+) D-perp.
Tensor3 constrained_connection_coeffs(const LinearNHSystem& sys, const Vec& x);

// Fiber acceleration of the constrained mechanical flow from the connection:
// ydot = -1/2(Gc^a_{bg}+Gc^a_{gb}) y^b y^g - P grad V, in adapted coordinates.
Vec constrained_spray(const LinearNHSystem& sys, const State& adapted);

struct RegularityCertificate {
    double min_rcond = 1.0;
    double min_eigenvalue = 0.0; // of C_ab, meaningful for mechanical systems
    int samples = 0;
    bool pass = false;
};

// Samples states from the provided generator and certifies C_ab invertibility.
RegularityCertificate certify_regular(const LinearNHSystem& sys,
                                      const std::function<State()>& sample_adapted, int count,
                                      double rcond_floor = 1e-12);

} // namespace almech

#endif
