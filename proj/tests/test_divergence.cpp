#include <cmath>
#include <random>

#include "doctest.h"
#include "sdive/divergence.hpp"

using namespace sdive;

TEST_CASE("tuning pair exponents") {
    const TuningPair t = TuningPair::make(0.5, -0.5);
    CHECK(t.A == doctest::Approx(1.0 - 0.5 * 0.5));
    CHECK(t.B == doctest::Approx(0.5 + 0.5 * 0.5));
    CHECK(t.A + t.B == doctest::Approx(1.5).epsilon(1e-15));
    CHECK_THROWS_AS(TuningPair::make(-0.1, 0.0), InvalidInput);

    // A + B = 1 + alpha across a grid
    for (double a : {0.0, 0.3, 0.77, 1.0})
        for (double l : {-1.0, -0.41, 0.0, 1.3, 2.0}) {
            const TuningPair tp = TuningPair::make(a, l);
            CHECK(std::abs(tp.A + tp.B - (1.0 + a)) <= 4e-16 * (1.0 + std::abs(l)));
        }
}

TEST_CASE("pearson residual with ratio clamp") {
    CHECK(pearson_residual(2.0, 2.0) == doctest::Approx(0.0));
    CHECK(pearson_residual(0.0, 1.0) == doctest::Approx(-1.0 + 1e-10));
    CHECK(pearson_residual(3.0, 1.0) == doctest::Approx(2.0));
    CHECK(pearson_residual(1e30, 1.0) == doctest::Approx(1e10 - 1.0));
    CHECK_THROWS_AS(pearson_residual(std::nan(""), 1.0), InvalidInput);
    CHECK_THROWS_AS(pearson_residual(1.0, 0.0), InvalidInput);
}

TEST_CASE("k function values and limits") {
    const TuningPair any = TuningPair::make(0.5, 0.3);
    CHECK(k_function(0.0, any) == doctest::Approx(0.0));

    const TuningPair a1 = TuningPair::make(1.0, 0.7);  // A = 1 regardless of lambda
    CHECK(a1.A == doctest::Approx(1.0));
    CHECK(k_function(1.0, a1) == doctest::Approx(1.0));

    const TuningPair a0 = TuningPair::make(0.0, -1.0);  // A = 0, log branch
    CHECK(std::abs(a0.A) <= kLimitBranchTol);
    CHECK(k_function(std::exp(1.0) - 1.0, a0) == doctest::Approx(1.0));

    CHECK_THROWS_AS(k_function(-1.5, any), DomainError);
}

TEST_CASE("k prime values") {
    const TuningPair any = TuningPair::make(0.3, 0.9);
    CHECK(k_prime(0.0, any) == doctest::Approx(1.0));

    const TuningPair a2 = TuningPair::make(0.0, 1.0);  // A = 2
    CHECK(a2.A == doctest::Approx(2.0));
    CHECK(k_prime(3.0, a2) == doctest::Approx(4.0));

    const TuningPair ah = TuningPair::make(0.5, -1.0);  // A = 0.5
    CHECK(ah.A == doctest::Approx(0.5));
    CHECK(k_prime(1.0, ah) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
}

TEST_CASE("k prime matches central differences of k") {
    const double step = 1e-6;
    for (double A_target : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
        // alpha = 0 makes lambda = A - 1
        const TuningPair t = TuningPair::make(0.0, A_target - 1.0);
        for (double delta : {-0.9, -0.5, 0.0, 0.7, 2.0, 5.5, 10.0}) {
            const double fd = (k_function(delta + step, t) - k_function(delta - step, t)) /
                              (2.0 * step);
            const double kp = k_prime(delta, t);
            CHECK(std::abs(fd - kp) <= 1e-5 * std::max(1.0, std::abs(kp)));
        }
    }
}

TEST_CASE("divergence of identical densities is zero") {
    QuadratureSpec quad;
    const DensityEvaluator g = normal_evaluator(0.0, 1.0);
    const DensityEvaluator f = normal_evaluator(0.0, 1.0);
    for (auto [a, l] : {std::pair{0.5, 0.5}, {0.0, 0.0}, {1.0, -1.0}, {0.25, 2.0}}) {
        const double s = s_divergence(g, f, TuningPair::make(a, l), quad);
        CHECK(std::abs(s) <= quad.abs_tol);
    }
}

TEST_CASE("alpha = 1 is the squared L2 distance") {
    // \int (f-g)^2 for N(0,1) vs N(1,1) equals (1/sqrt(pi)) (1 - e^{-1/4})
    QuadratureSpec quad;
    const DensityEvaluator g = normal_evaluator(0.0, 1.0);
    const DensityEvaluator f = normal_evaluator(1.0, 1.0);
    const double expected = (1.0 - std::exp(-0.25)) / std::sqrt(M_PI);
    CHECK(expected == doctest::Approx(0.1247982).epsilon(1e-6));
    const double s = s_divergence(g, f, TuningPair::make(1.0, 0.3), quad);
    CHECK(s == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("lambda drops out at alpha = 1") {
    QuadratureSpec quad;
    const DensityEvaluator g = normal_evaluator(0.2, 1.3);
    const DensityEvaluator f = normal_evaluator(-0.4, 0.8);
    const double s0 = s_divergence(g, f, TuningPair::make(1.0, -1.0), quad);
    for (double l : {0.0, 2.0}) {
        const double s = s_divergence(g, f, TuningPair::make(1.0, l), quad);
        CHECK(std::abs(s - s0) <= 1e-8);
    }
}

TEST_CASE("limit branches are continuous at A = 0 and B = 0") {
    QuadratureSpec quad;
    const DensityEvaluator g = normal_evaluator(0.3, 1.1);
    const DensityEvaluator f = normal_evaluator(0.0, 1.0);
    const double alpha = 0.3;

    // A = 1 + lambda (1 - alpha) = target  =>  lambda = (target - 1)/(1 - alpha)
    const double s_a0 =
        s_divergence(g, f, TuningPair::make(alpha, -1.0 / (1.0 - alpha)), quad);
    for (double eps : {1e-6, -1e-6}) {
        const TuningPair t = TuningPair::make(alpha, (eps - 1.0) / (1.0 - alpha));
        CHECK(std::abs(t.A - eps) <= 1e-12);
        CHECK(std::abs(s_divergence(g, f, t, quad) - s_a0) <= 1e-5);
    }

    // B = alpha - lambda (1 - alpha) = target  =>  lambda = (alpha - target)/(1 - alpha)
    const double s_b0 =
        s_divergence(g, f, TuningPair::make(alpha, alpha / (1.0 - alpha)), quad);
    for (double eps : {1e-6, -1e-6}) {
        const TuningPair t = TuningPair::make(alpha, (alpha - eps) / (1.0 - alpha));
        CHECK(std::abs(t.B - eps) <= 1e-12);
        CHECK(std::abs(s_divergence(g, f, t, quad) - s_b0) <= 1e-5);
    }
}

TEST_CASE("nonnegativity over random density pairs and tunings") {
    QuadratureSpec quad;
    std::mt19937_64 rng(991);
    std::uniform_real_distribution<double> umu(-2.0, 2.0), usd(0.5, 2.0), ua(0.0, 1.0),
        ul(-1.0, 2.0);
    for (int it = 0; it < 50; ++it) {
        const double mg = umu(rng), mf = umu(rng);
        double sg = usd(rng), sf = usd(rng);
        if (std::abs(mg - mf) < 0.05 && std::abs(sg - sf) < 0.05) sf += 0.2;
        const DensityEvaluator g = normal_evaluator(mg, sg);
        const DensityEvaluator f = normal_evaluator(mf, sf);
        const double s = s_divergence(g, f, TuningPair::make(ua(rng), ul(rng)), quad);
        CHECK(s >= -quad.abs_tol);
    }
}

TEST_CASE("density mass probes normalization") {
    QuadratureSpec quad;
    CHECK(density_mass(normal_evaluator(1.0, 2.5), quad) == doctest::Approx(1.0).epsilon(1e-8));
    const DensityEvaluator mix =
        normal_mixture_evaluator({0.9, 0.1}, {0.0, 5.0}, {1.0, 1.0});
    CHECK(density_mass(mix, quad) == doctest::Approx(1.0).epsilon(1e-8));
}
