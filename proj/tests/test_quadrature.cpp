#include <cmath>

#include "doctest.h"
#include "sdive/quadrature.hpp"

using namespace sdive;

TEST_CASE("adaptive simpson integrates smooth functions to tolerance") {
    QuadratureSpec q;
    CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0, q) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI, q) ==
          doctest::Approx(2.0).epsilon(1e-10));
    // standard normal over +-8 integrates to ~1
    const double mass = integrate(
        [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }, -8.0, 8.0, q);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("narrow spikes are caught by the initial panel count") {
    QuadratureSpec q;
    // spike of width 0.01 inside [-10, 10]
    auto spike = [](double x) {
        const double z = x / 0.01;
        return std::exp(-0.5 * z * z) / (0.01 * std::sqrt(2.0 * M_PI));
    };
    const double v = integrate(spike, -10.0, 10.0, q, 128);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("vector quadrature integrates components together") {
    QuadratureSpec q;
    const Vector v = integrate_vec(
        [](double x, double* out) {
            out[0] = 1.0;
            out[1] = x;
            out[2] = x * x;
        },
        0.0, 2.0, 3, q);
    CHECK(v[0] == doctest::Approx(2.0));
    CHECK(v[1] == doctest::Approx(2.0));
    CHECK(v[2] == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("subdivision budget exhaustion raises a numeric error") {
    QuadratureSpec q;
    q.max_subdivisions = 8;
    CHECK_THROWS_AS(integrate([](double x) { return std::sin(50.0 * x) * std::exp(x); }, 0.0,
                              20.0, q, 1),
                    NumericError);
}

TEST_CASE("non-finite integrand values raise") {
    QuadratureSpec q;
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, -1.0, 1.0, q), NumericError);
}

TEST_CASE("normal tail quantile") {
    // Phi^{-1} checks: upper tail 0.025 -> 1.959964
    CHECK(normal_tail_z(0.025) == doctest::Approx(1.9599639845).epsilon(1e-8));
    CHECK(normal_tail_z(0.158655) == doctest::Approx(1.0).epsilon(1e-4));
    const double z = normal_tail_z(1e-10);
    const double tail = 0.5 * std::erfc(z / std::sqrt(2.0));
    CHECK(tail == doctest::Approx(1e-10).epsilon(1e-6));
}

TEST_CASE("interval widening stops once the integrand has decayed") {
    auto f = [](double x) { return std::exp(-x * x); };
    const Interval iv = widen_until_decayed(f, {-1.0, 1.0}, 1e-12);
    CHECK(f(iv.lo) <= 1e-12);
    CHECK(f(iv.hi) <= 1e-12);
}
