#ifndef ALMECH_NUMERICS_HPP
#define ALMECH_NUMERICS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "almech/errors.hpp"

namespace almech {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Rank-3 structure tensor, indexed T[gamma](alpha, beta).
using Tensor3 = std::vector<Mat>;

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

// A scalar function of a base point x in R^n and a fiber point y in R^m.
// Evaluation must be deterministic; analytic_grad, when present, returns the
// full (n+m)-gradient and is preferred by every derivative path.
struct ScalarField {
    int n_base = 0;
    int n_fiber = 0;
    std::function<double(const Vec&, const Vec&)> eval;
    std::function<Vec(const Vec&, const Vec&)> analytic_grad; // optional

    double operator()(const Vec& x, const Vec& y) const {
        double v = eval(x, y);
        if (!is_finite(v)) throw NonFiniteEvaluation("ScalarField evaluated to a non-finite value");
        return v;
    }
    bool has_grad() const { return static_cast<bool>(analytic_grad); }
};

enum class FDScheme { central2, central4 };

struct FDConfig {
    double step_base = 1e-6;
    double step_fiber = 1e-6;
    FDScheme scheme = FDScheme::central2;

    void validate() const {
        if (!(step_base > 0.0) || !(step_fiber > 0.0))
            throw InvalidParameters("FDConfig steps must be strictly positive");
    }
};

// Central-difference gradient of f at (x, y), length n+m (base block first).
// central4 halves the step twice and Richardson-extrapolates the three
// central estimates. Uses analytic_grad when the field carries one.
Vec fd_gradient(const ScalarField& f, const Vec& x, const Vec& y, const FDConfig& cfg = {});

// Gradient of a plain callable along one coordinate block.
Vec fd_gradient_raw(const std::function<double(const Vec&)>& f, const Vec& at,
                    double step, FDScheme scheme);

// Jacobian of a vector-valued map R^n -> R^k, k x n.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at,
                double step = 1e-6, FDScheme scheme = FDScheme::central2);

// Directional derivative of a matrix field along v (entrywise central difference).
Mat fd_matrix_directional(const std::function<Mat(const Vec&)>& f, const Vec& at,
                          const Vec& v, double step = 1e-6);

// Symmetric second-derivative block d^2 f / du dv of a callable on one vector,
// Richardson-extrapolated cross differences. Used for Hessians of Lagrangians.
Mat fd_hessian_block(const std::function<double(const Vec&, const Vec&)>& f,
                     const Vec& u, const Vec& v, bool same_block_uu, bool same_block_vv,
                     double step_u, double step_v);

// Solve A z = b by pivoted elimination. Throws SingularMatrix when the
// reciprocal condition estimate falls below tol_det.
Vec solve_dense(const Mat& A, const Vec& b, double tol_det = 1e-12);
Mat solve_dense(const Mat& A, const Mat& B, double tol_det = 1e-12);

// Reciprocal condition estimate from pivoted LU (min|pivot| / max|pivot| scaled).
double rcond_estimate(const Mat& A);

// Orthonormal basis of ker(A) for an s x m matrix; m x k result, possibly k=0.
Mat nullspace(const Mat& A, double rank_tol = 1e-10);

// Validates determinism and analytic_grad consistency of a field at points.
// Returns the max relative deviation between analytic and FD gradients.
double validate_scalar_field(const ScalarField& f, const std::vector<std::pair<Vec, Vec>>& pts,
                             const FDConfig& cfg = {});

} // namespace almech

#endif
