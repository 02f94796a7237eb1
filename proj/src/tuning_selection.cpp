#include "sdive/tuning_selection.hpp"

#include <cmath>
#include <cstdio>

namespace sdive {

void TuningSearchConfig::validate() const {
    quad.validate();
    if (alpha_grid.empty() || lambda_grid.empty())
        throw InvalidInput("tuning grids must be nonempty");
    for (double a : alpha_grid)
        if (a < 0.0 || a > 1.0) throw InvalidInput("tuning alpha grid must lie in [0,1]");
}

std::string TuningSelection::surface_csv() const {
    std::string s = "alpha,lambda,bias2,var,score\n";
    char buf[160];
    for (const TuningCell& c : surface) {
        if (!c.ok) continue;
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g\n", c.alpha, c.lambda, c.bias2,
                      c.variance, c.score);
        s += buf;
    }
    return s;
}

TuningSelection select_tuning(std::span<const double> sample, const ParametricModel& model,
                              const TuningSearchConfig& config) {
    config.validate();
    if (sample.size() < 10) throw InvalidInput("tuning selection needs at least 10 observations");
    const double n = static_cast<double>(sample.size());

    TuningSelection sel;
    if (config.pilot_theta) {
        model.require_in_space(*config.pilot_theta);
        sel.pilot = *config.pilot_theta;
    } else {
        FitConfig pc;
        pc.method = FitMethod::mdpde;
        pc.tuning = TuningPair::make(1.0, 0.0);
        pc.quad = config.quad;
        try {
            const FitResult pilot_fit = fit_mdpde(sample, model, pc);
            if (!pilot_fit.converged) throw TuningAbort("pilot fit did not converge");
            sel.pilot = pilot_fit.theta_hat;
        } catch (const TuningAbort&) {
            throw;
        } catch (const Error& e) {
            throw TuningAbort(std::string("pilot fit failed: ") + e.what());
        }
    }

    const SmoothedData gn = smooth_data(sample, config.kernel);
    const DensityEvaluator gn_ev = gn.as_evaluator();

    bool have_best = false;
    TuningCell best_cell;
    for (double lambda : config.lambda_grid)
        for (double alpha : config.alpha_grid) {
            TuningCell cell;
            cell.alpha = alpha;
            cell.lambda = lambda;
            try {
                FitConfig fc;
                fc.method = FitMethod::msde_star;
                fc.tuning = TuningPair::make(alpha, lambda);
                fc.bandwidth = BandwidthChoice::fixed(config.kernel.bandwidth_h);
                fc.quad = config.quad;
                const FitResult fr = fit_msde_star(sample, model, fc);
                if (!fr.converged) throw NumericError("cell fit did not converge");
                cell.theta = fr.theta_hat;

                Matrix sand;
                if (config.empirical_variance) {
                    const Matrix j = j_matrix_general(model, fr.theta_hat, gn_ev, config.kernel,
                                                      fc.tuning, config.quad);
                    const Matrix v = v_matrix_general(model, fr.theta_hat, gn_ev, gn_ev,
                                                      config.kernel, fc.tuning, config.quad);
                    const Matrix jinv = inverse(j);
                    sand = symmetrized(matmul(matmul(jinv, v), jinv));
                } else {
                    sand = sandwich_covariance(model, fr.theta_hat, config.kernel, alpha,
                                               config.quad)
                               .sandwich;
                }

                const Vector d = fr.theta_hat - sel.pilot;
                cell.bias2 = dot(d, d);
                double tr = 0.0;
                for (int i = 0; i < sand.rows; ++i) tr += sand(i, i);
                cell.variance = tr / n;
                cell.score = cell.bias2 + cell.variance;
                cell.ok = true;
            } catch (const Error&) {
                cell.ok = false;  // excluded from the minimum, still reported
            }
            sel.surface.push_back(cell);

            if (cell.ok) {
                // ties favor efficiency: smaller alpha, then smaller |lambda|
                const bool better =
                    !have_best || cell.score < best_cell.score ||
                    (cell.score == best_cell.score &&
                     (cell.alpha < best_cell.alpha ||
                      (cell.alpha == best_cell.alpha &&
                       std::abs(cell.lambda) < std::abs(best_cell.lambda))));
                if (better) {
                    best_cell = cell;
                    have_best = true;
                }
            }
        }

    if (!have_best) throw TuningAbort("every tuning grid cell failed");
    sel.best = TuningPair::make(best_cell.alpha, best_cell.lambda);
    return sel;
}

}  // namespace sdive
