#ifndef ALMECH_ALGEBROID_HPP
#define ALMECH_ALGEBROID_HPP

#include <functional>
#include <string>
#include <vector>

#include "almech/numerics.hpp"

namespace almech {

// A point of the total space: base coordinates x in R^n, fiber coordinates y
// in R^m with respect to the chart frame.
struct State {
    Vec x;
    Vec y;
};

// Single-chart Lie algebroid: anchor matrix field rho(x) (n x m) and the
// structure tensor field C(x) with C[gamma](alpha,beta) the coefficient of
// e_gamma in the bracket of frame sections e_alpha, e_beta.
struct AlgebroidChart {
    int n = 0;
    int m = 0;
    std::function<Mat(const Vec&)> anchor;
    std::function<Tensor3(const Vec&)> structure;
    std::vector<std::string> x_labels;
    std::vector<std::string> y_labels;
    FDConfig fd;

    Mat rho(const Vec& x) const;
    Tensor3 C(const Vec& x) const;

    // Sum_{beta,gamma} C^alpha_{beta gamma} a^beta b^gamma for all alpha.
    Vec structure_contract(const Vec& x, const Vec& a, const Vec& b) const;
    Vec structure_contract(const Tensor3& C, const Vec& a, const Vec& b) const;
};

// Convenience constructors for common charts.
AlgebroidChart tangent_bundle_chart(int n, std::vector<std::string> labels = {});
AlgebroidChart lie_algebra_chart(const Tensor3& constants, std::vector<std::string> labels = {});

// A section x -> sigma(x) in frame components.
struct SectionField {
    std::function<Vec(const Vec&)> eval;
    std::function<Mat(const Vec&)> analytic_jacobian; // optional, m x n

    Vec operator()(const Vec& x) const { return eval(x); }
    Mat jacobian(const Vec& x, const FDConfig& fd) const;
};

SectionField constant_section(const Vec& value);

// Element of the prolongation at base_state, in the local basis {X_alpha, V_alpha}.
struct ProlongationVector {
    State base_state;
    Vec comp_X;
    Vec comp_V;
};

// Right-hand side of the base/fiber evolution at a state.
struct Dynamics {
    Vec xdot;
    Vec ydot;
};

// Vertical endomorphism S: X_alpha -> V_alpha, V_alpha -> 0.
ProlongationVector vertical_endomorphism(const ProlongationVector& z);
// Liouville section at a state.
ProlongationVector liouville(const State& s);
// Vertical lift of b at a state: comp_X = 0, comp_V = b.
ProlongationVector vertical_lift(const Vec& b, const State& s);

// Directional derivative of a scalar field g(x,y) along rho^1(z).
double anchored_derivative(const AlgebroidChart& chart, const ProlongationVector& z,
                           const ScalarField& g, const FDConfig& fd = {});

struct StructureReport {
    double max_residual_anchor = 0.0;
    double max_residual_jacobi = 0.0;
    double max_residual_antisymmetry = 0.0;
    bool pass = false;
};

// Evaluates both structure identities (anchor compatibility and the cyclic
// Jacobi identity) with finite-difference x-derivatives at the given points.
StructureReport check_structure_equations(const AlgebroidChart& chart,
                                          const std::vector<Vec>& points, double tol);

// Bracket of two sections at x, in frame components.
Vec bracket_sections(const AlgebroidChart& chart, const SectionField& sigma,
                     const SectionField& eta, const Vec& x);

// Differential of a base function: (rho(x))^T grad_x f.
Vec differential_of_function(const AlgebroidChart& chart, const ScalarField& f, const Vec& x);

// Complete lift of a section at a state; the fiber part is
//   rho^i_beta y^beta d(sigma^alpha)/dx^i - C^alpha_{beta gamma} sigma^beta y^gamma,
// the sign fixed by the defining derivation property (see tests).
ProlongationVector complete_lift(const AlgebroidChart& chart, const SectionField& sigma,
                                 const State& s);

} // namespace almech

#endif
