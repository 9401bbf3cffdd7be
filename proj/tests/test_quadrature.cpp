#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phasecost/common.hpp"
#include "phasecost/quadrature.hpp"

using namespace phasecost;
using std::numbers::pi;

TEST_CASE("smooth integrals") {
    auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(quad::integrate([](double x) { return std::sin(x); }, 0.0, pi).value == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("endpoint singularities") {
    auto r = quad::integrate_endpoints([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    r = quad::integrate_endpoints([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    r = quad::integrate_endpoints([](double x) { return std::sqrt(1.0 - x * x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(pi / 4.0).epsilon(1e-12));
    // int_t^a sqrt((a-s)/(s-t)) ds = pi/2 (a-t)
    const double a = 2.5, t = 0.3;
    r = quad::integrate_endpoints([&](double s) { return std::sqrt((a - s) / (s - t)); }, t, a);
    CHECK(r.value == doctest::Approx(pi / 2.0 * (a - t)).epsilon(1e-12));
}

TEST_CASE("pieces and jumps") {
    auto step = [](double x) { return x < 0.3 ? 2.0 : 1.0; };
    auto r = quad::integrate_pieces(step, 0.0, 1.0, {0.3});
    CHECK(r.value == doctest::Approx(0.6 + 0.7).epsilon(1e-14));
}

TEST_CASE("semi-infinite ranges") {
    auto r = quad::integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(pi / 2.0).epsilon(1e-11));
    r = quad::integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    // int_1^inf s^-1 (s-1)^-1/2 ds = pi
    r = quad::integrate_to_infinity([](double s) { return 1.0 / (s * std::sqrt(s - 1.0)); }, 1.0, 1.0);
    CHECK(r.value == doctest::Approx(pi).epsilon(1e-10));
    CHECK_THROWS_AS(quad::integrate_to_infinity([](double) { return 1.0; }, 0.0, 1.0), NumericError);
}

TEST_CASE("shells toward zero") {
    auto r = quad::integrate_from_zero([](double x) { return std::pow(x, -0.5); }, 1.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-10));
    r = quad::integrate_from_zero([](double x) { return std::pow(x, -1.5); }, 1.0);
    CHECK(std::isinf(r.value));
    r = quad::integrate_from_zero([](double x) { return 1.0 / x; }, 1.0);
    CHECK(std::isinf(r.value));
    r = quad::integrate_from_zero([](double) { return 0.0; }, 1.0);
    CHECK(r.value == 0.0);
}
