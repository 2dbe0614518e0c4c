#ifndef ALMECH_REDUCTION_HPP
#define ALMECH_REDUCTION_HPP

#include <random>

#include "almech/bracket.hpp"

namespace almech {

// Bundle map between two charts: base map phi and fiber matrix field Phi(x)
// acting covariantly on fibers, y' = Phi(x) y.
struct MorphismSpec {
    std::shared_ptr<const AlgebroidChart> source;
    std::shared_ptr<const AlgebroidChart> target;
    std::function<Vec(const Vec&)> base_map;
    std::function<Mat(const Vec&)> fiber_map;

    Vec phi(const Vec& x) const { return base_map(x); }
    Mat Phi(const Vec& x) const { return fiber_map(x); }
    State apply(const State& s) const { return {base_map(s.x), fiber_map(s.x) * s.y}; }
};

MorphismSpec identity_morphism(std::shared_ptr<const AlgebroidChart> chart);

struct MorphismReport {
    double max_residual = 0.0;
    bool pass = false;
};

// Admissibility: rho'(phi(x)) Phi(x) = D(phi)(x) rho(x) at the sample points.
MorphismReport check_admissible(const MorphismSpec& mor, const std::vector<Vec>& points, double tol);

// Morphism identity:
// Phi^b_g C^g_{ad} = rho^i_a dPhi^b_d/dx^i - rho^i_d dPhi^b_a/dx^i + C'^b_{ts} Phi^t_a Phi^s_d.
MorphismReport check_morphism(const MorphismSpec& mor, const std::vector<Vec>& points, double tol);

// Prolongation pushforward: comp_X' = Phi comp_X,
// comp_V' = (d Phi along rho(x) comp_X) y + Phi comp_V.
ProlongationVector push_prolongation(const MorphismSpec& mor, const ProlongationVector& z);

// Composition (base maps compose, fiber maps multiply along the base map).
MorphismSpec compose(const MorphismSpec& morAB, const MorphismSpec& morBC);

struct ReductionReport {
    double max_state_deviation = 0.0;
    double max_energy_mismatch = 0.0;
    bool pass = false;
};

// Integrates the target system from Phi(a(0)) and compares Phi(a(t)) with the
// target trajectory; also checks the energy correspondence along the way.
// Preconditions (L = L' o Phi, constraint mapping, fiberwise surjectivity) are
// verified on sampled states and raise PreconditionFailed when violated.
ReductionReport verify_reduction(const LinearNHSystem& sysE, const LinearNHSystem& sysE2,
                                 const MorphismSpec& mor, const State& start,
                                 const IntegratorConfig& cfg, double tol, std::mt19937_64& rng);
ReductionReport verify_reduction(const NonlinearNHSystem& sysE, const NonlinearNHSystem& sysE2,
                                 const MorphismSpec& mor, const State& start,
                                 const IntegratorConfig& cfg, double tol, std::mt19937_64& rng);

// max |{f' o Phi, g' o Phi}_nh - {f', g'}'_nh o Phi| over the given states.
double verify_bracket_morphism(const NonlinearNHSystem& sysE, const NonlinearNHSystem& sysE2,
                               const MorphismSpec& mor, const Observable& f2, const Observable& g2,
                               const std::vector<State>& states);

// Pulls a target observable back through the morphism.
Observable pullback_observable(const MorphismSpec& mor, const Observable& f2);

// --- Chaplygin-type reduction ---
struct ChaplyginReduced {
    std::shared_ptr<const AlgebroidChart> tm_chart; // tangent-bundle chart on M
    LagrangianField Lbar;
    // Gyroscopic 1-form on TM: components jk(state) (length n).
    std::function<Vec(const State&)> jk_form;
    // Forced dynamics on TM satisfying i_Gamma omega_Lbar - dE_Lbar = -<J, K(T, .)>.
    DynamicsFn reduced_dynamics;
    // Splitting h: TM -> D in original fiber coordinates.
    std::function<Vec(const State&)> h;
};

// Requires r = n and the anchor restricted to D invertible onto TM.
ChaplyginReduced chaplygin_reduce(const LinearNHSystem& sys);

// --- momentum maps ---
struct MomentumBundle {
    int k = 0;
    std::function<Mat(const Vec&)> Psi; // m x k
};

// J(a)(kvec) = dL/dy^a (Psi kvec)^a; returns the K^* covector.
Vec momentum(const LagrangianField& Lf, const MomentumBundle& mb, const State& s);
double momentum_scalar(const LagrangianField& Lf, const MomentumBundle& mb,
                       const SectionField& sigma, const State& s);

// <dL, (Psi sigma)^C>: anchored derivative of L along the complete lift.
double momentum_equation_rhs(const LagrangianField& Lf, const MomentumBundle& mb,
                             const SectionField& sigma, const State& s);

struct MomentumReport {
    double max_residual = 0.0;
    double max_drift = 0.0; // drift of J^sigma itself
};

// Residual of d/dt J^sigma = <dL, (Psi sigma)^C> along a trajectory. When
// check_in_d is set, verifies Psi(sigma(x)) stays in D (linear systems).
MomentumReport momentum_equation_residual(const LagrangianField& Lf, const MomentumBundle& mb,
                                          const SectionField& sigma, const Trajectory& traj,
                                          const LinearNHSystem* check_in_d = nullptr);

// Noether constant F = <theta_L, sigma^C> - f for d_{sigma^C} L = fdot.
double noether_function(const LagrangianField& Lf, const SectionField& sigma, const State& s,
                        const ScalarField* f_base = nullptr);

} // namespace almech

#endif
