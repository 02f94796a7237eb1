#include <cmath>

#include "doctest.h"
#include "sdive/model.hpp"
#include "support.hpp"

using namespace sdive;

TEST_CASE("normal density values") {
    CHECK(normal_density(0.0, 1.0, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(normal_density(0.0, 3.0, 0.0) == doctest::Approx(0.1329807601338109).epsilon(1e-12));
    CHECK(normal_density(1.0, 1.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK_THROWS_AS(normal_density(0.0, 0.0, 1.0), InvalidInput);
}

TEST_CASE("normal score values") {
    const Vector s1 = normal_score(0.0, 1.0, 0.0);
    CHECK(s1[0] == doctest::Approx(0.0));
    CHECK(s1[1] == doctest::Approx(-1.0));
    const Vector s2 = normal_score(0.0, 1.0, 1.0);
    CHECK(s2[0] == doctest::Approx(1.0));
    CHECK(s2[1] == doctest::Approx(0.0));
    const Vector s3 = normal_score(0.0, 2.0, 2.0);
    CHECK(s3[0] == doctest::Approx(0.5));
    CHECK(s3[1] == doctest::Approx(0.0));
}

TEST_CASE("score and curvature match finite differences of the log density") {
    const NormalModel model;
    for (const Vector theta : {Vector{0.0, 1.0}, Vector{1.0, 2.0}, Vector{-0.5, 0.7}}) {
        for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
            const Vector u = model.score(theta, x);
            const Matrix du = model.score_gradient(theta, x);
            for (int j = 0; j < 2; ++j) {
                const double st = 1e-6 * std::max(1.0, std::abs(theta[j]));
                Vector tp = theta, tm = theta;
                tp[j] += st;
                tm[j] -= st;
                const double fd =
                    (model.log_density(tp, x) - model.log_density(tm, x)) / (2.0 * st);
                CHECK(std::abs(fd - u[j]) <= 1e-5 * std::max(1.0, std::abs(u[j])));

                const Vector up = model.score(tp, x), um = model.score(tm, x);
                for (int i = 0; i < 2; ++i) {
                    const double fd2 = (up[i] - um[i]) / (2.0 * st);
                    CHECK(std::abs(fd2 - du(i, j)) <= 1e-4 * std::max(1.0, std::abs(du(i, j))));
                }
            }
        }
    }
}

TEST_CASE("sampler moments for N(0,3)") {
    const NormalModel model;
    const auto xs = model.sample({0.0, 3.0}, 100000, 2024);
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= xs.size();
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / xs.size());
    CHECK(std::abs(mean) <= 0.05);
    CHECK(std::abs(sd - 3.0) <= 0.05);
}

TEST_CASE("closed-form normal MLE") {
    const NormalModel model;
    const std::vector<double> xs = {1.0, 2.0, 3.0, 6.0};
    const Vector mle = *model.closed_form_mle(xs);
    CHECK(mle[0] == doctest::Approx(3.0));
    CHECK(mle[1] == doctest::Approx(std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 4.0)));
    CHECK_THROWS_AS(model.closed_form_mle(std::vector<double>{2.0, 2.0}), DegenerateFit);
}

TEST_CASE("distribution spec parsing") {
    const DistributionSpec n = DistributionSpec::parse("normal(0,3)");
    CHECK(n.kind == DistributionSpec::Kind::normal);
    CHECK(n.p1 == doctest::Approx(0.0));
    CHECK(n.p2 == doctest::Approx(3.0));
    CHECK(n.to_string() == "normal(0,3)");

    CHECK(DistributionSpec::parse("t(1)").kind == DistributionSpec::Kind::student_t);
    CHECK(DistributionSpec::parse("chisq(10)").kind == DistributionSpec::Kind::chi_squared);
    CHECK_THROWS_AS(DistributionSpec::parse("cauchy(0,1)"), InvalidInput);
    CHECK_THROWS_AS(DistributionSpec::parse("normal(0,-1)"), InvalidInput);
    CHECK_THROWS_AS(DistributionSpec::parse("normal(zero,1)"), InvalidInput);
}

TEST_CASE("contaminated sampling") {
    const DistributionSpec target = DistributionSpec::normal(0.0, 1.0);
    const DistributionSpec contam = DistributionSpec::normal(15.0, 1.0);

    SUBCASE("epsilon zero short-circuits to pure target draws") {
        const auto a = sample_contaminated(target, contam, 0.0, 500, 9);
        const auto b = sample_contaminated(target, std::nullopt, 0.0, 500, 9);
        CHECK(a == b);
    }
    SUBCASE("near-total contamination pulls the mean to the contaminant") {
        const auto xs = sample_contaminated(target, contam, 1.0 - 1e-12, 10000, 31);
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= xs.size();
        CHECK(std::abs(mean - 15.0) <= 0.05);
    }
    SUBCASE("fixed seed reproduces the sample") {
        const auto a = sample_contaminated(target, contam, 0.1, 200, 77);
        const auto b = sample_contaminated(target, contam, 0.1, 200, 77);
        CHECK(a == b);
        const auto c = sample_contaminated(target, contam, 0.1, 200, 78);
        CHECK(a != c);
    }
    SUBCASE("argument validation") {
        CHECK_THROWS_AS(sample_contaminated(target, contam, 1.0, 10, 1), InvalidInput);
        CHECK_THROWS_AS(sample_contaminated(target, std::nullopt, 0.1, 10, 1), InvalidInput);
    }
}

TEST_CASE("derive_seed decorrelates replications") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(123, 45) == derive_seed(123, 45));
}
