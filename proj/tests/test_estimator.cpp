#include <cmath>

#include "doctest.h"
#include "sdive/estimator.hpp"
#include "support.hpp"

using namespace sdive;

namespace {

FitConfig config_for(FitMethod m, double alpha, double lambda, double h) {
    FitConfig c;
    c.method = m;
    c.tuning = TuningPair::make(alpha, lambda);
    c.bandwidth = BandwidthChoice::fixed(h);
    return c;
}

}  // namespace

TEST_CASE("mdpde at alpha 0 is the exact normal MLE") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(80, 1.0, 2.0, 555);
    FitConfig c;
    c.method = FitMethod::mdpde;
    c.tuning = TuningPair::make(0.0, 0.0);
    const FitResult r = fit_mdpde(xs, model, c);
    const Vector mle = *model.closed_form_mle(xs);
    CHECK(r.converged);
    CHECK(r.theta_hat[0] == doctest::Approx(mle[0]).epsilon(1e-12));
    CHECK(r.theta_hat[1] == doctest::Approx(mle[1]).epsilon(1e-12));
    CHECK(r.estimating_eq_norm <= c.grad_tol);
}

TEST_CASE("mdpde resists a gross outlier") {
    const NormalModel model;
    auto xs = testing::pseudo_normal_sample(50, 0.0, 1.0, 7);
    FitConfig c;
    c.method = FitMethod::mdpde;
    c.tuning = TuningPair::make(0.5, 0.0);
    const FitResult clean = fit_mdpde(xs, model, c);

    xs.push_back(50.0);
    const FitResult robust = fit_mdpde(xs, model, c);
    CHECK(robust.converged);
    CHECK(std::abs(robust.theta_hat[0]) < 0.2);
    CHECK(robust.estimating_eq_norm <= c.grad_tol);

    // refit comparison: the outlier barely moves the robust fit while the
    // MLE mean shifts by roughly outlier/n
    CHECK(std::abs(robust.theta_hat[0] - clean.theta_hat[0]) < 0.01);
    const Vector mle = *model.closed_form_mle(xs);
    CHECK(mle[0] - clean.theta_hat[0] > 0.7);
}

TEST_CASE("mdpde rejects nonzero lambda and degenerate samples") {
    const NormalModel model;
    FitConfig c;
    c.method = FitMethod::mdpde;
    c.tuning = TuningPair::make(0.5, -0.5);
    CHECK_THROWS_AS(fit_mdpde(std::vector<double>{1.0, 2.0, 3.0}, model, c), InvalidInput);
    c.tuning = TuningPair::make(0.0, 0.0);
    CHECK_THROWS_AS(fit_mdpde(std::vector<double>{3.0, 3.0, 3.0}, model, c), DegenerateFit);
}

TEST_CASE("fits at alpha 1 do not depend on lambda") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(40, 0.0, 1.0, 314);
    for (auto method : {FitMethod::msde_star, FitMethod::msde_beran}) {
        const FitResult a = fit(xs, model, config_for(method, 1.0, -1.0, 0.5));
        for (double l : {0.0, 2.0}) {
            const FitResult b = fit(xs, model, config_for(method, 1.0, l, 0.5));
            CHECK(std::abs(a.theta_hat[0] - b.theta_hat[0]) <= 1e-6);
            CHECK(std::abs(a.theta_hat[1] - b.theta_hat[1]) <= 1e-6);
        }
    }
}

TEST_CASE("msde-star with a transparent kernel reduces to the MLE at (0,0)") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(60, 0.5, 1.5, 2718);
    const Vector mle = *model.closed_form_mle(xs);

    // tiny bandwidth: near-degenerate smoothing
    const FitResult tiny = fit_msde_star(xs, model, config_for(FitMethod::msde_star, 0.0, 0.0, 1e-3));
    CHECK(tiny.converged);
    CHECK(std::abs(tiny.theta_hat[0] - mle[0]) <= 1e-2);
    CHECK(std::abs(tiny.theta_hat[1] - mle[1]) <= 1e-2);

    // moderate bandwidth: still the MLE because the gaussian kernel is
    // transparent for the normal family at alpha = 0
    const FitResult mid = fit_msde_star(xs, model, config_for(FitMethod::msde_star, 0.0, 0.0, 0.6));
    CHECK(mid.converged);
    CHECK(std::abs(mid.theta_hat[0] - mle[0]) <= 1e-5);
    CHECK(std::abs(mid.theta_hat[1] - mle[1]) <= 1e-5);
}

TEST_CASE("msde-beran approaches the MLE as the bandwidth vanishes") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(60, 0.0, 1.0, 12);
    const Vector mle = *model.closed_form_mle(xs);
    const FitResult r = fit_msde_beran(xs, model, config_for(FitMethod::msde_beran, 0.0, 0.0, 1e-3));
    CHECK(r.converged);
    CHECK(std::abs(r.theta_hat[0] - mle[0]) <= 1e-2);
    CHECK(std::abs(r.theta_hat[1] - mle[1]) <= 1e-2);
}

TEST_CASE("beran scale estimates inflate with the bandwidth") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(40, 0.0, 1.0, 460);
    double prev = 0.0;
    for (double h0 : {0.4, 0.6, 0.8, 1.0}) {
        FitConfig c = config_for(FitMethod::msde_beran, 0.5, 0.0, 1.0);
        c.bandwidth = BandwidthChoice::relative(h0);
        const FitResult r = fit_msde_beran(xs, model, c);
        CHECK(r.converged);
        CHECK(r.theta_hat[1] > prev);
        prev = r.theta_hat[1];
    }
}

TEST_CASE("msde-star is consistent on a large clean sample") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(10000, 0.0, 3.0, 90210);
    FitConfig c = config_for(FitMethod::msde_star, 0.3, -0.3, 1.0);
    c.bandwidth = BandwidthChoice::auto_rule();
    c.quad.abs_tol = 1e-7;
    c.quad.rel_tol = 1e-6;
    const FitResult r = fit_msde_star(xs, model, c);
    CHECK(r.converged);
    CHECK(std::abs(r.theta_hat[0]) <= 0.1);
    CHECK(std::abs(r.theta_hat[1] - 3.0) <= 0.1);
}

TEST_CASE("estimating equation norm is honored at the returned point") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(50, 0.0, 2.0, 33);
    for (auto method : {FitMethod::msde_star, FitMethod::msde_beran}) {
        const FitResult r = fit(xs, model, config_for(method, 0.5, -0.5, 0.5));
        CHECK(r.converged);
        CHECK(r.estimating_eq_norm <= 1e-6);
        CHECK(r.bandwidth_used == doctest::Approx(0.5));
    }
}

TEST_CASE("location equivariance and scale equivariance") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(60, 0.0, 1.0, 1001);
    const FitConfig base = config_for(FitMethod::msde_star, 0.5, -0.5, 0.4);
    const FitResult r0 = fit_msde_star(xs, model, base);

    SUBCASE("shift") {
        std::vector<double> shifted(xs);
        for (double& v : shifted) v += 2.5;
        const FitResult r1 = fit_msde_star(shifted, model, base);
        CHECK(std::abs(r1.theta_hat[0] - (r0.theta_hat[0] + 2.5)) <= 1e-6);
        CHECK(std::abs(r1.theta_hat[1] - r0.theta_hat[1]) <= 1e-6);
    }
    SUBCASE("scale, with the bandwidth scaled alongside") {
        const double cscale = 3.0;
        std::vector<double> scaled(xs);
        for (double& v : scaled) v *= cscale;
        const FitResult r1 =
            fit_msde_star(scaled, model, config_for(FitMethod::msde_star, 0.5, -0.5, 0.4 * cscale));
        CHECK(std::abs(r1.theta_hat[0] - cscale * r0.theta_hat[0]) <= 1e-5);
        CHECK(std::abs(r1.theta_hat[1] - cscale * r0.theta_hat[1]) <= 1e-5);
    }
}

TEST_CASE("robust and MLE starts agree on clean data") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(50, 0.0, 3.0, 246);
    FitConfig c = config_for(FitMethod::msde_star, 0.5, -0.5, 1.0);
    c.init = FitConfig::Init::robust;
    const FitResult a = fit_msde_star(xs, model, c);
    c.init = FitConfig::Init::mle;
    const FitResult b = fit_msde_star(xs, model, c);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(std::abs(a.objective - b.objective) <= 1e-8);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(30, 0.0, 1.0, 8);
    FitConfig c = config_for(FitMethod::msde_star, 0.5, -0.5, 0.5);
    c.max_iter = 1;
    c.grad_tol = 1e-14;
    c.param_tol = 1e-16;
    const FitResult r = fit_msde_star(xs, model, c);
    CHECK_FALSE(r.converged);
}

TEST_CASE("explicit initialization is honored") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(40, 0.0, 1.0, 77);
    FitConfig c = config_for(FitMethod::msde_star, 0.3, 0.0, 0.5);
    c.init = FitConfig::Init::explicit_theta;
    c.init_theta = {0.2, 1.1};
    const FitResult r = fit_msde_star(xs, model, c);
    CHECK(r.converged);
}

TEST_CASE("mdpde/mdpde-star equivalence under a transparent kernel") {
    const NormalModel model;
    const auto xs = testing::pseudo_normal_sample(60, 0.0, 1.0, 4242);
    const QuadratureSpec quad;

    SUBCASE("alpha 0: gaussian kernel is transparent, estimators coincide") {
        const EquivalenceReport rep =
            mdpde_star_equivalence(xs, model, KernelSpec::gaussian(0.7), 0.0, quad);
        CHECK(rep.mdpde.converged);
        CHECK(rep.mdpde_star.converged);
        CHECK(rep.parameter_gap <= 1e-4);
    }
    SUBCASE("alpha 0.5 with a tiny bandwidth: small gap") {
        const EquivalenceReport rep =
            mdpde_star_equivalence(xs, model, KernelSpec::gaussian(1e-3), 0.5, quad);
        CHECK(rep.parameter_gap <= 1e-2);
    }
    SUBCASE("alpha 0.5 with a wide kernel: gap merely reported") {
        const EquivalenceReport rep =
            mdpde_star_equivalence(xs, model, KernelSpec::gaussian(1.0), 0.5, quad);
        CHECK(std::isfinite(rep.parameter_gap));
    }
}

TEST_CASE("population fit recovers the generating parameter") {
    const NormalModel model;
    const KernelSpec k = KernelSpec::gaussian(0.5);
    const QuadratureSpec quad;
    // g* equals the smoothed model at (0.3, 1.2): N(0.3, 1.2^2 + h^2)
    const DensityEvaluator g_star =
        normal_evaluator(0.3, std::sqrt(1.2 * 1.2 + 0.25));
    const FitResult r = fit_population(g_star, model, k, TuningPair::make(0.5, -0.5), quad,
                                       {0.1, 1.0});
    CHECK(r.converged);
    CHECK(r.theta_hat[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(r.theta_hat[1] == doctest::Approx(1.2).epsilon(1e-6));
}
