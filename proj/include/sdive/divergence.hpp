// Two-parameter S-divergence family S_(alpha,lambda)(g, f): tuning pair,
// Pearson residual, the K residual-adjustment function, and the divergence
// itself with its A=0 / B=0 limit branches.
#pragma once

#include <functional>

#include "sdive/common.hpp"
#include "sdive/quadrature.hpp"

namespace sdive {

// Ratio g/f is clamped to this range before use; keeps K finite where the
// bounded-ratio regime would otherwise be violated in far tails.
inline constexpr double kRatioClampLo = 1e-10;
inline constexpr double kRatioClampHi = 1e10;

// Below this magnitude the power form (x^A - 1)/A has no significant digits
// left; the logarithmic limit is used instead.
inline constexpr double kLimitBranchTol = 1e-8;

struct TuningPair {
    double alpha = 0.0;
    double lambda = 0.0;
    double A = 1.0;  // 1 + lambda (1 - alpha)
    double B = 0.0;  // alpha - lambda (1 - alpha)

    static TuningPair make(double alpha, double lambda) {
        require_finite(alpha, "alpha");
        require_finite(lambda, "lambda");
        if (alpha < 0.0) throw InvalidInput("alpha must be nonnegative");
        TuningPair t;
        t.alpha = alpha;
        t.lambda = lambda;
        t.A = 1.0 + lambda * (1.0 - alpha);
        t.B = alpha - lambda * (1.0 - alpha);
        return t;
    }

    bool log_branch_a() const { return std::abs(A) <= kLimitBranchTol; }
    bool log_branch_b() const { return std::abs(B) <= kLimitBranchTol; }
};

// A univariate density together with the interval containing all but the
// requested tail mass per side. panel_hints marks sharp features (kernel
// bumps at data points) the quadrature should start panels at.
struct DensityEvaluator {
    std::function<double(double)> pdf;
    std::function<Interval(double)> tail_interval;
    std::vector<double> panel_hints;

    double operator()(double x) const { return pdf(x); }
};

DensityEvaluator normal_evaluator(double mu, double sigma);
DensityEvaluator normal_mixture_evaluator(const std::vector<double>& weights,
                                          const std::vector<double>& mus,
                                          const std::vector<double>& sigmas);

// Integral of the density over its truncated support; ~1 for a proper density.
double density_mass(const DensityEvaluator& g, const QuadratureSpec& quad);

// Pearson-type residual delta = g/f - 1 with the ratio clamped.
double pearson_residual(double g_val, double f_val);

double clamped_ratio(double g_val, double f_val);

// K(delta) = ((delta+1)^A - 1)/A, log(delta+1) in the A -> 0 limit.
double k_function(double delta, const TuningPair& tuning);

// K'(delta) = (delta+1)^(A-1).
double k_prime(double delta, const TuningPair& tuning);

// Full three-term S-divergence between g and f, each integral evaluated by
// the shared quadrature engine over the union of both truncation intervals.
double s_divergence(const DensityEvaluator& g, const DensityEvaluator& f,
                    const TuningPair& tuning, const QuadratureSpec& quad);

}  // namespace sdive
