#include <doctest.h>

#include <cmath>
#include <random>

#include "phasecost/costs.hpp"
#include "phasecost/io.hpp"

using namespace phasecost;

TEST_CASE("evaluation") {
    CHECK(eval_tau(TransportCost::power(0.5), 4.0) == doctest::Approx(2.0));
    auto up = TransportCost::urban_planning(1.0, 0.5, 0.5);
    CHECK(eval_tau(up, 0.5) == doctest::Approx(0.5));
    CHECK(eval_tau(up, 3.0) == doctest::Approx(2.0));
    for (const auto& t : {TransportCost::power(0.3), up, TransportCost::piecewise_affine({0, 1}, {2, 1}),
                          TransportCost::sampled({0, 1, 2}, {0, 1, 1.5})})
        CHECK(eval_tau(t, 0.0) == 0.0);
    CHECK_THROWS_AS(eval_tau(up, -1.0), DomainError);
    auto pa = TransportCost::piecewise_affine({0, 1, 3}, {2, 1, 0.25});
    CHECK(eval_tau(pa, 2.0) == doctest::Approx(3.0));
    CHECK(eval_tau(pa, 5.0) == doctest::Approx(4.0 + 0.5));
}

TEST_CASE("derivatives") {
    auto p = TransportCost::power(0.5);
    CHECK(right_derivative(p, 1.0) == doctest::Approx(0.5));
    CHECK(std::isinf(right_derivative(p, 0.0)));
    auto up = TransportCost::urban_planning(1.0, 0.5, 0.5);
    CHECK(right_derivative(up, 2.0) == 0.5);
    CHECK(right_derivative(up, 1.0) == 0.5);
    CHECK(left_derivative(up, 1.0) == 1.0);
    auto s = TransportCost::sampled({0, 1, 2}, {0, 1, 1.5});
    CHECK(right_derivative(s, 1.0) == doctest::Approx(0.5));
    CHECK(left_derivative(s, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("conjugates") {
    const double a = 1.0, b = 0.5, d = 0.5;
    auto up = TransportCost::urban_planning(a, b, d);
    CHECK(conjugate(up, 0.4).is_infinite());
    CHECK(conjugate(up, 0.75).value == doctest::Approx(d * (a - 0.75) / (a - b)));
    CHECK(conjugate(up, 1.0).value == 0.0);
    CHECK(conjugate(up, 1.5).value == 0.0);
    // brute-force sup over a fine grid as the oracle for the closed forms
    for (double alpha : {0.25, 0.5, 0.75}) {
        auto p = TransportCost::power(alpha);
        for (double t : {0.3, 0.7, 1.3}) {
            // maximiser is at (alpha/t)^(1/(1-alpha)); scan around it
            const double wstar = std::pow(alpha / t, 1.0 / (1.0 - alpha));
            double best = 0.0;
            for (int i = 0; i <= 200000; ++i) {
                const double w = wstar * (0.5 + i * 1e-5);
                best = std::max(best, std::pow(w, alpha) - t * w);
            }
            CHECK(conjugate(p, t).value == doctest::Approx(best).epsilon(1e-9));
        }
    }
    auto pa = TransportCost::piecewise_affine({0, 1, 3}, {2, 1, 0.25});
    CHECK(conjugate(pa, 0.1).is_infinite());
    CHECK(conjugate(pa, 0.5).value == doctest::Approx(4.0 - 1.5));
    CHECK(conjugate(pa, 2.0).value == 0.0);
}

TEST_CASE("conjugate is nonincreasing and convex; derivative nonincreasing") {
    std::vector<TransportCost> costs{TransportCost::power(0.5), TransportCost::power(0.75),
                                     TransportCost::urban_planning(1.0, 0.5, 0.5),
                                     TransportCost::piecewise_affine({0, 1, 3}, {2, 1, 0.25})};
    for (const auto& tau : costs) {
        std::vector<double> ts, vs;
        for (int i = 1; i <= 60; ++i) {
            const double t = 0.05 * i;
            auto cv = conjugate(tau, t);
            if (cv.is_infinite()) continue;
            ts.push_back(t);
            vs.push_back(cv.value);
        }
        for (std::size_t i = 1; i < vs.size(); ++i) CHECK(vs[i] <= vs[i - 1] + 1e-14);
        for (std::size_t i = 2; i < vs.size(); ++i) {
            const double s1 = (vs[i - 1] - vs[i - 2]) / (ts[i - 1] - ts[i - 2]);
            const double s2 = (vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1]);
            CHECK(s2 >= s1 - 1e-9);
        }
        double prev = kInf;
        for (int i = 0; i <= 50; ++i) {
            const double r = right_derivative(tau, 0.1 * i);
            CHECK(r <= prev);
            prev = r;
        }
    }
    // conjugate at tau'(0) vanishes when finite
    CHECK(conjugate(TransportCost::urban_planning(2, 1, 3), 2.0).value == 0.0);
    CHECK(conjugate(TransportCost::piecewise_affine({0, 1}, {3, 1}), 3.0).value == 0.0);
}

TEST_CASE("dyadic interpolation") {
    auto p = TransportCost::power(0.5);
    auto i1 = interpolate_affine(p, 1);
    const auto& pa = *i1.as<PiecewiseAffineCost>();
    REQUIRE(pa.breakpoints.size() == 2);  // {0, 0.5}; the segment [0.5, 1] carries the final slope
    CHECK(eval_tau(i1, 0.5) == doctest::Approx(std::sqrt(0.5)));
    CHECK(eval_tau(i1, 1.0) == doctest::Approx(1.0));
    double prev_err = kInf;
    for (int n = 1; n <= 6; ++n) {
        auto in = interpolate_affine(p, n);
        double err = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double w = i / 1000.0;
            CHECK(eval_tau(in, w) <= eval_tau(p, w) + 1e-12);
            err = std::max(err, eval_tau(p, w) - eval_tau(in, w));
        }
        CHECK(err < prev_err);
        prev_err = err;
    }
    // kinks on the grid: identical function
    auto q = TransportCost::piecewise_affine({0, 0.25, 0.5}, {3, 2, 0.5});
    auto qi = interpolate_affine(q, 3, 1.0);
    CHECK(qi.as<PiecewiseAffineCost>()->breakpoints == q.as<PiecewiseAffineCost>()->breakpoints);
    for (double w : {0.1, 0.3, 0.7, 2.0}) CHECK(eval_tau(qi, w) == doctest::Approx(eval_tau(q, w)));
}

TEST_CASE("admissibility") {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    CHECK(validate_admissible(TransportCost::power(0.5), grid).all_passed());
    CHECK(validate_admissible(TransportCost::urban_planning(1, 0.5, 0.5), {0, 0.5, 1, 1.5, 2, 4}).all_passed());
    auto bad = TransportCost::sampled({0, 1, 2}, {0, 1, 3});
    auto rep = validate_admissible(bad, {0, 1, 2});
    CHECK_FALSE(rep.get("concave").passed);
    CHECK(rep.get("nondecreasing").passed);
    auto offset = TransportCost::sampled({0, 1, 2}, {0.5, 1, 1.2});
    CHECK_FALSE(validate_admissible(offset, {0, 1, 2}).get("zero_at_origin").passed);
    CHECK_THROWS_AS(validate_admissible(bad, {0, 1}), ValidationError);
}

TEST_CASE("json round trip") {
    for (const auto& t : {TransportCost::power(0.5), TransportCost::urban_planning(1, 0.5, 0.5),
                          TransportCost::piecewise_affine({0, 1}, {1, 0.5}), TransportCost::sampled({0, 1}, {0, 1})}) {
        auto j = io::to_json(t);
        auto back = io::transport_cost_from_json(j);
        CHECK(io::to_json(back) == j);
    }
    CHECK(io::to_json(TransportCost::power(0.5)).dump() == R"({"alpha":0.5,"type":"power"})");
    CHECK_THROWS_AS(io::transport_cost_from_json(io::json{{"type", "power"}}), ValidationError);
    CHECK_THROWS_AS(io::transport_cost_from_json(io::json{{"type", "cubic"}}), ValidationError);
}
