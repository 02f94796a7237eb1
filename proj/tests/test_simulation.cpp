#include <cmath>

#include "doctest.h"
#include "sdive/simulation.hpp"
#include "support.hpp"

using namespace sdive;

namespace {

SimulationConfig small_config() {
    SimulationConfig cfg;
    cfg.target = DistributionSpec::normal(0.0, 1.0);
    cfg.n = 30;
    cfg.replications = 12;
    cfg.alpha_grid = {0.0, 0.5};
    cfg.lambda_grid = {0.0, -0.5};
    cfg.seed = 77;
    cfg.quad.abs_tol = 1e-7;
    cfg.quad.rel_tol = 1e-6;
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
    const std::string text =
        "# demo config\n"
        "[target]\n"
        "dist = normal(0,3)\n"
        "[contaminant]\n"
        "dist = normal(15,3)\n"
        "epsilon = 0.10\n"
        "[grid]\n"
        "alpha = 0,0.1,0.3,0.4,0.5,0.8,1\n"
        "lambda = -1,-0.7,-0.5,-0.3,0,0.5,1,1.5,2\n"
        "[run]\n"
        "n = 50\n"
        "replications = 1000\n"
        "method = msde-star\n"
        "bandwidth = normal_reference\n"
        "seed = 20250809\n"
        "workers = 8\n";
    const SimulationConfig cfg = SimulationConfig::parse_text(text);
    CHECK(cfg.alpha_grid.size() == 7);
    CHECK(cfg.lambda_grid.size() == 9);
    CHECK(cfg.epsilon == doctest::Approx(0.10));
    CHECK(cfg.n == 50);
    CHECK(cfg.method == FitMethod::msde_star);
    CHECK(cfg.worker_count == 8);
    CHECK(cfg.resolved_theta_true()[1] == doctest::Approx(3.0));
}

TEST_CASE("config parse errors carry line numbers") {
    try {
        SimulationConfig::parse_text("[grid]\nalpha = 0.1\nlambda = zero\n");
        FAIL("expected a parse error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
        SimulationConfig::parse_text("[run]\nunknown_key = 1\n");
        FAIL("expected a parse error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(SimulationConfig::parse_text("[grid]\nalpha = 0.1\n"), InvalidInput);
}

TEST_CASE("simulation is deterministic across worker counts") {
    const NormalModel model;
    SimulationConfig cfg = small_config();
    cfg.worker_count = 1;
    const SimulationReport a = run_simulation(cfg, model);
    cfg.worker_count = 4;
    const SimulationReport b = run_simulation(cfg, model);
    CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("epsilon zero ignores the contaminant spec") {
    const NormalModel model;
    SimulationConfig cfg = small_config();
    cfg.replications = 6;
    const SimulationReport plain = run_simulation(cfg, model);
    cfg.contaminant = DistributionSpec::normal(15.0, 3.0);
    const SimulationReport with_spec = run_simulation(cfg, model);
    CHECK(plain.to_csv() == with_spec.to_csv());
}

TEST_CASE("report invariants and layout") {
    const NormalModel model;
    const SimulationConfig cfg = small_config();
    const SimulationReport rep = run_simulation(cfg, model);

    CHECK(rep.cells.size() == 2 * 2 * 2);  // cells x parameters
    for (const CellRecord& c : rep.cells) {
        CHECK(c.mse >= c.bias * c.bias - 3.0 * c.mc_stderr - 1e-12);
        CHECK(c.failures == 0);
    }
    const CellRecord* found = rep.find(0.5, -0.5, 1);
    REQUIRE(found != nullptr);
    CHECK(found->mse > 0.0);
    CHECK(rep.find(0.25, 0.0, 0) == nullptr);

    const std::string csv = rep.to_csv();
    CHECK(csv.rfind("alpha,lambda,parameter,bias,mse,mc_stderr,failures,unreliable\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

    const std::string meta = rep.metadata_json();
    CHECK(meta.find("\"cells\": 8") != std::string::npos);
    CHECK(meta.find("wall_time_s") != std::string::npos);
}

TEST_CASE("failure flagging when iterations are starved") {
    const NormalModel model;
    SimulationConfig cfg = small_config();
    cfg.replications = 8;
    cfg.max_iter = 1;
    const SimulationReport rep = run_simulation(cfg, model);
    int flagged = 0;
    for (const CellRecord& c : rep.cells)
        if (c.unreliable) ++flagged;
    CHECK(flagged > 0);
}

TEST_CASE("bandwidth stability experiment") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(40, 0.0, 1.0, 1977);
    QuadratureSpec quad;
    quad.abs_tol = 1e-8;
    quad.rel_tol = 1e-7;

    SUBCASE("single h0 leaves the ratio undefined") {
        const StabilityTable t = bandwidth_stability_experiment(
            xs, model, {TuningPair::make(0.5, 0.0)}, {0.7}, quad);
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].msde_range == doctest::Approx(0.0));
        CHECK(std::isnan(t.rows[0].range_ratio));
    }
    SUBCASE("smoothed-model scale estimates barely move with h0") {
        const StabilityTable t = bandwidth_stability_experiment(
            xs, model, {TuningPair::make(0.0, 1.0)}, {0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
            quad);
        CHECK(t.rows[0].msde_star_range < 0.02);
        CHECK(t.rows[0].range_ratio > 3.0);
    }
    SUBCASE("two h0 points produce finite ranges and csv") {
        const StabilityTable t = bandwidth_stability_experiment(
            xs, model, {TuningPair::make(0.5, 0.0)}, {0.4, 1.0}, quad);
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].msde_range > t.rows[0].msde_star_range);
        CHECK(t.rows[0].range_ratio > 1.0);
        const std::string csv = t.to_csv();
        CHECK(csv.find("msde-beran") != std::string::npos);
        CHECK(csv.find("msde-star") != std::string::npos);
    }
}
