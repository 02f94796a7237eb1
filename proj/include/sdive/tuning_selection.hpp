// Data-driven (alpha, lambda) selection: minimize the estimated summed MSE
//   (theta_hat - theta_pilot)'(theta_hat - theta_pilot) + trace(sandwich)/n
// over a tuning grid, with the alpha = 1 power-divergence fit as the default
// pilot.
#pragma once

#include <optional>
#include <span>

#include "sdive/diagnostics.hpp"
#include "sdive/estimator.hpp"

namespace sdive {

struct TuningSearchConfig {
    Vector alpha_grid;
    Vector lambda_grid;
    std::optional<Vector> pilot_theta;  // explicit pilot; otherwise mdpde at alpha = 1
    KernelSpec kernel = KernelSpec::gaussian(1.0);
    QuadratureSpec quad{};
    // Variance part of the criterion: sandwich evaluated at the fitted model
    // (default) or with the empirical smoothed data density in place of the
    // model-smoothed g.
    bool empirical_variance = false;

    void validate() const;
};

struct TuningCell {
    double alpha = 0.0;
    double lambda = 0.0;
    double bias2 = 0.0;
    double variance = 0.0;
    double score = 0.0;  // bias2 + variance, exactly
    Vector theta;
    bool ok = false;
};

struct TuningSelection {
    TuningPair best;
    std::vector<TuningCell> surface;
    Vector pilot;

    std::string surface_csv() const;
};

TuningSelection select_tuning(std::span<const double> sample, const ParametricModel& model,
                              const TuningSearchConfig& config);

}  // namespace sdive
