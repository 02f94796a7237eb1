// Influence-function diagnostics and asymptotic covariance for the smoothed
// minimum-divergence estimators: the kernel-convolved weighted scores
// u^{a*}, u^{2a*}, u^{1a*}, the J and V matrices with their sandwich, the
// first- and second-order influence functions, and the transparent-kernel
// residual check.
#pragma once

#include <string>
#include <vector>

#include "sdive/divergence.hpp"
#include "sdive/kernel.hpp"
#include "sdive/model.hpp"

namespace sdive {

// u^{a*}(y) = \int u~(x) f*(x)^exponent W(x, y, h) dx. The exponent is a free
// argument so the same routine also evaluates the (a-1)-weighted variant.
Vector u_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                    double exponent, double y, const QuadratureSpec& quad);

// u^{2a*}(y) = \int u~ u~^T f*^a W(.,y,h); symmetric.
Matrix u2_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                     double alpha, double y, const QuadratureSpec& quad);

// u^{1a*}(y) = \int grad u~ f*^a W(.,y,h); symmetric.
Matrix u1_alpha_star(const ParametricModel& model, const Vector& theta, const KernelSpec& kernel,
                     double alpha, double y, const QuadratureSpec& quad);

// E_theta[u^{a*}(X)] = \int f*^{1+a} u~.
Vector expected_u_alpha_star(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, double alpha, const QuadratureSpec& quad);

// J at the model, three algebraically equal routes kept separate so they can
// cross-check each other:
//   direct        \int u~ u~^T f*^{1+a}
//   expectation   E_theta[u^{2a*}(X)]        (nested quadrature)
//   gradient      E_theta[-grad u^{a*}(X)]   (finite differences in theta)
// j_matrix_model uses the direct route and enforces positive definiteness.
Matrix j_matrix_model(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double alpha, const QuadratureSpec& quad);
Matrix j_matrix_via_expectation(const ParametricModel& model, const Vector& theta,
                                const KernelSpec& kernel, double alpha,
                                const QuadratureSpec& quad);
Matrix j_matrix_via_gradient(const ParametricModel& model, const Vector& theta,
                             const KernelSpec& kernel, double alpha, const QuadratureSpec& quad);

// V at the model: Var_theta[u^{a*}(X)] by nested quadrature.
Matrix v_matrix_model(const ParametricModel& model, const Vector& theta,
                      const KernelSpec& kernel, double alpha, const QuadratureSpec& quad);

// Equation-derivative matrix at a general smoothed density g* (best-fitting
// theta supplied by the caller). Scaled by 1/A relative to the raw form so
// the A = 0 branch stays well defined; the influence function and sandwich
// are invariant to that scale.
Matrix j_matrix_general(const ParametricModel& model, const Vector& theta,
                        const DensityEvaluator& g_star, const KernelSpec& kernel,
                        const TuningPair& tuning, const QuadratureSpec& quad);

// Variance under g_raw of the per-observation equation summand
//   Z(X) = \int W(x, X, h) K'(d_g(x)) f*(x)^a u~(x) dx
// by nested quadrature.
Matrix v_matrix_general(const ParametricModel& model, const Vector& theta,
                        const DensityEvaluator& g_star, const DensityEvaluator& g_raw,
                        const KernelSpec& kernel, const TuningPair& tuning,
                        const QuadratureSpec& quad);

struct AsymptoticCov {
    Matrix j;
    Matrix v;
    Matrix sandwich;  // J^-1 V J^-1
};

AsymptoticCov sandwich_covariance(const ParametricModel& model, const Vector& theta,
                                  const KernelSpec& kernel, double alpha,
                                  const QuadratureSpec& quad);

// Limit covariance of the smoothing-free power-divergence estimator
// (J_a^-1 V_a J_a^-1 with J_a = \int u u^T f^{1+a}, V_a = Var[u f^a]).
AsymptoticCov mdpde_limit_covariance(const ParametricModel& model, const Vector& theta,
                                     double alpha, const QuadratureSpec& quad);

struct IFReport {
    Vector y_grid;
    std::vector<Vector> if_values;  // T'(y) per grid point
    std::vector<double> second_order;        // T''(y); meaningful where defined
    std::vector<bool> second_order_defined;  // false marks a pole at that y
    bool at_model = true;
    bool has_second_order = false;
    std::vector<std::string> param_names;

    std::string to_csv() const;
};

// First-order influence function at the model:
//   T'(y) = J^-1 { u^{a*}(y) - E_theta[u^{a*}(X)] }.
// Depends on the tuning only through alpha; lambda is never read.
IFReport influence_function_model(const ParametricModel& model, const Vector& theta,
                                  const KernelSpec& kernel, const TuningPair& tuning,
                                  const Vector& y_grid, const QuadratureSpec& quad);

// First-order influence function at a general density g (not necessarily in
// the model family): requires the inner best fit of the smoothed model to
// the smoothed g, started from theta0.
IFReport influence_function_general(const ParametricModel& model, const DensityEvaluator& g,
                                    const KernelSpec& kernel, const TuningPair& tuning,
                                    const Vector& y_grid, const QuadratureSpec& quad,
                                    const Vector& theta0);

struct SecondOrderReport {
    Vector y_grid;
    Vector t_prime;
    Vector t_second;
    // Grid points where the value could not be evaluated; such rows serialize
    // with an empty field.
    std::vector<bool> defined;
};

// Second-order influence analysis for scalar-parameter models; this is where
// lambda enters the predicted bias (through the factor lambda (1 - alpha),
// so it drops out at alpha = 1). Computed by implicit differentiation of the
// estimating equation and validated against finite-contamination refit
// second differences.
SecondOrderReport second_order_influence(const ParametricModel& model, const Vector& theta,
                                         const KernelSpec& kernel, const TuningPair& tuning,
                                         const Vector& y_grid, const QuadratureSpec& quad);

struct TransparencyReport {
    Matrix M;
    Vector L;
    double max_residual = 0.0;
    bool transparent = false;  // max_residual <= 1e-6 on the supplied grid
};

// Least-squares fit of u^{a*}(y) = M f^a(y) u(y) + L over the grid; a kernel
// is alpha-transparent for the model when the residual vanishes.
TransparencyReport transparency_residual(const ParametricModel& model, const Vector& theta,
                                         const KernelSpec& kernel, double alpha,
                                         const QuadratureSpec& quad, const Vector& grid);

}  // namespace sdive
