#include <cmath>

#include "doctest.h"
#include "sdive/smoothing.hpp"
#include "support.hpp"

using namespace sdive;

namespace {
const QuadratureSpec kQuad;
}

TEST_CASE("normal model smooths to an inflated normal") {
    const NormalModel model;
    const KernelSpec k = KernelSpec::gaussian(0.5);
    const SmoothedDensity f = smooth_model(model, {0.0, 1.0}, k, kQuad);
    CHECK(f.closed_form());
    CHECK(f(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 1.25)).epsilon(1e-12));
    CHECK(f(0.0) == doctest::Approx(0.35682).epsilon(1e-4));
}

TEST_CASE("degenerate-kernel limit recovers the plain density") {
    const NormalModel model;
    const SmoothedDensity f = smooth_model(model, {0.0, 1.0}, KernelSpec::gaussian(1e-4), kQuad);
    for (double x : {-2.0, 0.0, 2.0})
        CHECK(std::abs(f(x) - model.density({0.0, 1.0}, x)) <= 1e-6);
}

TEST_CASE("numeric convolution agrees with the analytic form") {
    const testing::GenericNormalModel generic;
    const NormalModel closed;
    const KernelSpec k = KernelSpec::gaussian(0.5);
    const Vector theta{0.0, 1.0};
    const SmoothedDensity fg = smooth_model(generic, theta, k, kQuad);
    const SmoothedDensity fc = smooth_model(closed, theta, k, kQuad);
    CHECK_FALSE(fg.closed_form());
    for (double x = -3.0; x <= 3.0 + 1e-9; x += 1.0)
        CHECK(std::abs(fg(x) - fc(x)) <= 1e-8);
}

TEST_CASE("smoothed model keeps unit mass") {
    const NormalModel model;
    for (const Vector theta : {Vector{0.0, 1.0}, Vector{2.0, 0.6}}) {
        const SmoothedDensity f = smooth_model(model, theta, KernelSpec::gaussian(0.8), kQuad);
        CHECK(density_mass(f.as_evaluator(), kQuad) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("smoothed score closed forms") {
    const NormalModel model;
    // near-degenerate kernel: plain standard normal score at x = 1
    const Vector u0 = smoothed_score(model, {0.0, 1.0}, KernelSpec::gaussian(1e-8), 1.0, kQuad);
    CHECK(u0[0] == doctest::Approx(1.0).epsilon(1e-9));
    // h = 1 halves the location score: (x - mu)/(sigma^2 + h^2)
    const Vector u1 = smoothed_score(model, {0.0, 1.0}, KernelSpec::gaussian(1.0), 1.0, kQuad);
    CHECK(u1[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("finite-difference smoothed score matches the closed form") {
    const testing::GenericNormalModel generic;
    const NormalModel closed;
    const KernelSpec k = KernelSpec::gaussian(0.7);
    const Vector theta{0.3, 1.2};
    for (double x : {-1.5, -0.2, 0.3, 1.1, 2.4}) {
        const Vector ug = smoothed_score(generic, theta, k, x, kQuad);
        const Vector uc = smoothed_score(closed, theta, k, x, kQuad);
        for (int j = 0; j < 2; ++j) CHECK(std::abs(ug[j] - uc[j]) <= 1e-5);
    }
}

TEST_CASE("smoothed score hessian closed forms and symmetry") {
    const NormalModel model;
    const Matrix h0 =
        smoothed_score_hessian(model, {0.0, 1.0}, KernelSpec::gaussian(1e-8), 0.7, kQuad);
    CHECK(h0(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
    const Matrix h1 =
        smoothed_score_hessian(model, {0.0, 1.0}, KernelSpec::gaussian(1.0), 0.7, kQuad);
    CHECK(h1(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(h1(0, 1) == doctest::Approx(h1(1, 0)));
}

TEST_CASE("finite-difference smoothed hessian matches the closed form") {
    const testing::GenericNormalModel generic;
    const NormalModel closed;
    const KernelSpec k = KernelSpec::gaussian(0.7);
    const Vector theta{0.0, 1.0};
    for (double x : {-1.0, 0.5, 1.7}) {
        const Matrix hg = smoothed_score_hessian(generic, theta, k, x, kQuad);
        const Matrix hc = smoothed_score_hessian(closed, theta, k, x, kQuad);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(hg(i, j) - hc(i, j)) <= 1e-4);
    }
}

TEST_CASE("x-derivative of the smoothed model matches finite differences") {
    const NormalModel model;
    const KernelSpec k = KernelSpec::gaussian(0.6);
    const SmoothedDensity f = smooth_model(model, {0.2, 1.1}, k, kQuad);
    const double t2 = 1.1 * 1.1 + 0.36;
    for (double x : {-1.0, 0.2, 1.5}) {
        const double analytic = -(x - 0.2) / t2 * f(x);
        const double fd = (f(x + 1e-6) - f(x - 1e-6)) / 2e-6;
        CHECK(std::abs(analytic - fd) <= 1e-5);
    }
}
