// Monte-Carlo contamination harness: draws contaminated samples, fits every
// (alpha, lambda) grid cell per replication, and aggregates bias/MSE surfaces
// deterministically across a worker pool. Also the bandwidth-stability
// comparison between the model-smoothed and data-only-smoothed fits.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sdive/estimator.hpp"
#include "sdive/model.hpp"

namespace sdive {

struct SimulationConfig {
    DistributionSpec target = DistributionSpec::normal(0.0, 3.0);
    std::optional<DistributionSpec> contaminant;
    double epsilon = 0.0;
    int n = 50;
    int replications = 1000;
    Vector alpha_grid;
    Vector lambda_grid;
    FitMethod method = FitMethod::msde_star;
    BandwidthChoice bandwidth = BandwidthChoice::auto_rule();
    QuadratureSpec quad{};
    std::uint64_t seed = 1;
    int worker_count = 1;
    int max_iter = 500;
    // Bias/MSE reference; defaults to the target's (mu, sigma) for a normal
    // target and must be given explicitly otherwise.
    std::optional<Vector> theta_true;

    void validate() const;
    Vector resolved_theta_true() const;

    static SimulationConfig parse_file(const std::string& path);
    static SimulationConfig parse_text(const std::string& text);
    std::string echo() const;  // canonical key=value rendering for metadata
};

struct CellRecord {
    double alpha = 0.0;
    double lambda = 0.0;
    int parameter = 0;  // coordinate index of theta
    double bias = 0.0;
    double mse = 0.0;
    double mc_stderr = 0.0;  // Monte-Carlo standard error of the MSE estimate
    int failures = 0;
    bool unreliable = false;  // more than 5% of replications failed
};

struct SimulationReport {
    std::vector<CellRecord> cells;
    SimulationConfig config;
    double wall_time_s = 0.0;

    std::string to_csv() const;
    std::string metadata_json() const;
    const CellRecord* find(double alpha, double lambda, int parameter) const;
};

SimulationReport run_simulation(const SimulationConfig& config, const ParametricModel& model);

struct StabilityRow {
    double alpha = 0.0;
    double lambda = 0.0;
    Vector msde_sigma;       // data-only smoothing, per h0
    Vector msde_star_sigma;  // model smoothing, per h0
    double msde_range = 0.0;
    double msde_star_range = 0.0;
    double range_ratio = 0.0;  // NaN when undefined (single h0 or zero range)
};

struct StabilityTable {
    Vector h0_values;
    std::vector<StabilityRow> rows;
    std::string to_csv() const;
};

// Scale estimates of both methods across h = h0 * sigma0 for each tuning
// pair, with the per-row spread and the spread ratio.
StabilityTable bandwidth_stability_experiment(std::span<const double> sample,
                                              const ParametricModel& model,
                                              const std::vector<TuningPair>& tunings,
                                              const Vector& h0_values,
                                              const QuadratureSpec& quad);

}  // namespace sdive
