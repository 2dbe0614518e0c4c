#ifndef ALMECH_LAGRANGIAN_HPP
#define ALMECH_LAGRANGIAN_HPP

#include <memory>

#include "almech/algebroid.hpp"

namespace almech {

// Symmetric bundle metric with optional potential on the base.
struct MetricField {
    std::function<Mat(const Vec&)> G;
    std::function<Mat(const Vec&)> analytic_dG_dir; // optional: (x,v) packed; unused by default
    ScalarField V;                                  // optional; V.eval == nullptr means zero
    bool has_potential() const { return static_cast<bool>(V.eval); }
};

// Derivative bundle of a Lagrangian at a state. All fiber-second-derivative
// consumers read W from here; hess_xy(i,alpha) = d^2 L / dx^i dy^alpha.
struct LagrangianDerivatives {
    double value = 0.0;
    Vec grad_x;  // n
    Vec grad_y;  // m
    Mat W;       // m x m, symmetrized
    Mat hess_xy; // n x m
};

// Lagrangian on an algebroid chart. Mechanical-type Lagrangians carry
// analytic fiber derivatives (G y and G); generic ones use finite differences
// with a square-root-widened step for second derivatives.
struct LagrangianField {
    std::shared_ptr<const AlgebroidChart> chart;
    ScalarField L;
    FDConfig fd;

    // Present only for mechanical-type Lagrangians.
    std::shared_ptr<const MetricField> metric;

    double value(const State& s) const { return L(s.x, s.y); }
    Vec grad_x(const State& s) const;
    Vec grad_y(const State& s) const;
    LagrangianDerivatives derivatives(const State& s) const;
};

// W_{alpha beta} = d^2 L / dy^alpha dy^beta, explicitly symmetrized.
Mat hessian_W(const LagrangianField& Lf, const State& s);

// E_L = dL/dy^alpha y^alpha - L.
double energy(const LagrangianField& Lf, const State& s);

// Differential of the energy in the prolongation coframe {X^alpha, V^alpha}:
// first m entries rho^T grad_x E, last m entries W y.
Vec energy_differential(const LagrangianField& Lf, const State& s);

// Cartan 2-section as a 2m x 2m antisymmetric matrix in the ordered basis
// (X_1..X_m, V_1..V_m): blocks [[M, W], [-W, 0]] with
// M_{ab} = hess_xy^T rho - rho^T hess_xy + dL/dy^g C^g_{ab}.
Mat cartan_two_form(const LagrangianField& Lf, const State& s);

// Free Euler-Lagrange dynamics: solve W f = b with
// b_a = rho^i_a dL/dx^i - hess_xy^T (rho y) - dL/dy^g C^g_{ab} y^b; xdot = rho y.
Dynamics free_dynamics(const LagrangianField& Lf, const State& s);
ProlongationVector free_dynamics_section(const LagrangianField& Lf, const State& s);

// L(x,y) = 1/2 y^T G(x) y - V(x), with analytic fiber derivatives.
LagrangianField mechanical_lagrangian(std::shared_ptr<const AlgebroidChart> chart,
                                      std::shared_ptr<const MetricField> metric,
                                      FDConfig fd = {});

// Levi-Civita connection coefficients Gamma^a_{bg} of a bundle metric,
// from the Koszul formula expanded on the chart frame.
Tensor3 levi_civita_coeffs(const AlgebroidChart& chart, const MetricField& metric, const Vec& x,
                           const FDConfig& fd = {});

// Geodesic spray fiber acceleration: ydot^g = -1/2 (G^g_{ab}+G^g_{ba}) y^a y^b.
Vec connection_spray(const Tensor3& Gamma, const Vec& y);

} // namespace almech

#endif
