#include <doctest.h>

#include <cmath>
#include <random>

#include "phasecost/forward.hpp"
#include "phasecost/profiles.hpp"
#include "oracles.hpp"

using namespace phasecost;

namespace {

MassSpecificCost urban_step() { return urban_step_z(1.0, 0.5, 0.5); }

}  // namespace

TEST_CASE("optimal segment closed forms at phi_l=0, phi_r=1, w=1") {
    const auto s = optimal_segment(0.0, 1.0, 1.0);
    CHECK(s.T_hat == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(segment_ell(0.0, 1.0) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(s.energy == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    // the curvature that keeps the arc at mass w over length T_hat
    CHECK(s.lambda == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    QuadraticSegment q{0.0, s.T_hat, 0.0, 1.0, s.lambda};
    CHECK(q.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(2.0 * q.dirichlet() == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("segment arc carries mass w and energy 2 ell / w") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2.0), wm(0.05, 3.0);
    for (int k = 0; k < 200; ++k) {
        double pl = u(rng), pr = u(rng);
        if (pl > pr) std::swap(pl, pr);
        if (pr - pl < 1e-3) continue;
        const double w = wm(rng);
        const auto s = optimal_segment(pl, pr, w);
        QuadraticSegment q{1.0, 1.0 + s.T_hat, pl, pr, s.lambda};
        CHECK(q.mass() == doctest::Approx(w).epsilon(1e-12));
        CHECK(2.0 * q.dirichlet() == doctest::Approx(s.energy).epsilon(1e-12));
        CHECK(s.energy == doctest::Approx(2.0 * segment_ell(pl, pr) / w).epsilon(1e-13));
        CHECK(q.eval(1.0) == doctest::Approx(pr));
        CHECK(q.eval(1.0 + s.T_hat) == doctest::Approx(pl));
    }
}

TEST_CASE("segment energy scales like 1/w") {
    const auto a = optimal_segment(0.3, 1.2, 0.7), b = optimal_segment(0.3, 1.2, 1.4);
    CHECK(b.energy == doctest::Approx(0.5 * a.energy).epsilon(1e-14));
}

TEST_CASE("segment energy matches brute-force discrete minimization") {
    CHECK(oracle::brute_segment(0.0, 1.0, 1.0, 3.0) == doctest::Approx(4.0 / 9.0).epsilon(0.01));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.5), wm(0.2, 2.0);
    for (int k = 0; k < 10; ++k) {
        double pl = u(rng), pr = u(rng);
        if (pl > pr) std::swap(pl, pr);
        pr += 0.05;
        const double w = wm(rng);
        const auto s = optimal_segment(pl, pr, w);
        const double brute = oracle::brute_segment_over_T(pl, pr, w, s.T_hat);
        CHECK(brute == doctest::Approx(s.energy).epsilon(0.01));
    }
}

TEST_CASE("optimal segment rejects bad input") {
    CHECK_THROWS_AS(optimal_segment(1.0, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(optimal_segment(-0.1, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(optimal_segment(0.0, 0.5, 0.0), ValidationError);
}

TEST_CASE("urban-planning step profile at w=2") {
    const auto z = urban_step();
    const double P = urban_threshold(1.0, 0.5, 0.5);
    const auto p = build_step_profile(z, 2.0);
    const auto& pq = std::get<PiecewiseQuadraticProfile>(p.form);
    CHECK(p.exact_minimizer);
    CHECK(pq.plateau_height == doctest::Approx(P).epsilon(1e-15));
    REQUIRE(pq.segments.size() == 1);
    CHECK(pq.segments[0].mass() == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(pq.segments[0].lambda == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(p.energy == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(p.energy == tau_closed_form(z, 2.0).tau_value);
    CHECK(std::abs(p.mass - 2.0) <= 1e-10);
    CHECK(p.max_value() == doctest::Approx(P));
    // energy recomputed from the segments
    double e = 2.0 * pq.plateau_half_width * pq.plateau_height * 0.5;
    for (const auto& s : pq.segments) e += 2.0 * (s.dirichlet() + 1.0 * s.mass());
    CHECK(e == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("urban-planning step profile at the kink uses the plateau level") {
    const auto z = urban_step();
    const auto p = build_step_profile(z, 1.0);
    const auto& pq = std::get<PiecewiseQuadraticProfile>(p.form);
    CHECK(pq.plateau_half_width == doctest::Approx(0.25 / urban_threshold(1.0, 0.5, 0.5)).epsilon(1e-12));
    CHECK(p.energy == doctest::Approx(1.0).epsilon(1e-14));
    const auto lr = lagrange_slope(p, z, 1.0);
    CHECK(lr.lambda == doctest::Approx(0.5));
    CHECK(lr.right_slope == 0.5);
    CHECK(lr.left_slope == 1.0);
    CHECK(lr.consistent);
}

TEST_CASE("linear cost has no minimizer; the tent is an epsilon-minimizer") {
    const auto z = constant_z(0.8);
    CHECK_THROWS_AS(build_step_profile(z, 1.5), NoMinimizer);
    for (double delta : {1e-1, 1e-3, 1e-6}) {
        const auto p = build_step_profile(z, 1.5, delta);
        CHECK_FALSE(p.exact_minimizer);
        CHECK(std::abs(p.mass - 1.5) <= 1e-10);
        CHECK(p.energy <= 0.8 * 1.5 + delta * (1 + 1e-12));
        CHECK(p.energy >= 0.8 * 1.5);
        CHECK(profile_energy_sampled(p, PhaseFieldCost{z}) == doctest::Approx(p.energy).epsilon(1e-6));
    }
}

TEST_CASE("tent split across thresholds keeps band-wise energy") {
    const auto z = urban_step();
    const auto p = build_step_profile(z, 0.5, 0.05);
    CHECK(std::abs(p.mass - 0.5) <= 1e-10);
    CHECK(p.energy <= 0.5 + 0.05 + 1e-12);
    CHECK(profile_energy_sampled(p, PhaseFieldCost{z}, 200001) == doctest::Approx(p.energy).epsilon(1e-4));
}

TEST_CASE("random step profiles: mass, energy, bounds, monotone shape") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> nk(1, 4);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int built = 0;
    for (int trial = 0; trial < 200; ++trial) {
        StepFunction s;
        s.thresholds = {0.0};
        const int K = nk(rng);
        for (int i = 0; i < K; ++i) s.thresholds.push_back(s.thresholds.back() + u(rng));
        double level = u(rng);
        s.final_level = level;
        std::vector<double> lv;
        for (int i = 0; i < K; ++i) lv.push_back(level += u(rng));
        s.levels.assign(lv.rbegin(), lv.rend());
        const MassSpecificCost z(s);
        const PhaseFieldCost c{z};
        for (double w : {0.25, 1.0, 4.0, 16.0}) {
            if (!exists_minimizer(z, w).exists) {
                CHECK_THROWS_AS(build_step_profile(z, w), NoMinimizer);
                continue;
            }
            const auto p = build_step_profile(z, w);
            ++built;
            CHECK(std::abs(p.mass - w) <= 1e-10 * std::max(1.0, w));
            CHECK(p.energy == tau_closed_form(z, w).tau_value);
            const double top = p.max_value();
            CHECK(p.energy >= energy_estimate_bound(top, w));
            CHECK(p.energy >= modica_mortola_bound(c, top) * (1 - 1e-12));
            CHECK(profile_energy_sampled(p, c, 100001) == doctest::Approx(p.energy).epsilon(1e-3));
            const auto lr = lagrange_slope(p, z, w);
            CHECK(lr.consistent);
            const auto smp = p.sample(500);
            for (std::size_t k = 1; k < smp.psi.size(); ++k) CHECK(smp.psi[k] <= smp.psi[k - 1] + 1e-14);
            CHECK(p.eval(-0.3 * p.half_support()) == p.eval(0.3 * p.half_support()));
        }
    }
    CHECK(built > 100);
}

TEST_CASE("theta tail for c = phi^2") {
    AnalyticMonotone a;
    a.f = [](double x) { return x; };
    a.at_zero = 0.0;
    a.at_infinity = kInf;
    const PhaseFieldCost c{MassSpecificCost(MonotoneFunction(a))};
    const auto t = theta_profile(c, 1.0, 1e-3);
    CHECK(t.energy <= 1.0 / std::sqrt(2.0) + 1e-3);
    CHECK(t.energy <= 0.7081);
    CHECK(t.energy >= 1.0 / std::sqrt(2.0));
    CHECK(t.samples.psi.front() == 1.0);
    CHECK(t.samples.psi.back() == 0.0);
    CHECK(t.samples.y.front() == 0.0);
    CHECK(t.samples.y.back() == doctest::Approx(t.length));
    // energy recomputed from the samples
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < t.samples.y.size(); ++k) {
        const double h = t.samples.y[k + 1] - t.samples.y[k];
        const double d = t.samples.psi[k + 1] - t.samples.psi[k];
        const double m = 0.5 * (t.samples.psi[k] + t.samples.psi[k + 1]);
        e += 0.5 * d * d / h + h * m * m;
    }
    CHECK(e == doctest::Approx(t.energy).epsilon(1e-3));
}

TEST_CASE("theta tail for c = 0 is a ramp of slope delta / psi_hat") {
    const PhaseFieldCost c{constant_z(0.0)};
    for (double delta : {1e-1, 1e-3}) {
        const auto t = theta_profile(c, 2.0, delta);
        CHECK(t.length == doctest::Approx(2.0 / (delta / 2.0)).epsilon(1e-10));
        CHECK(t.energy == doctest::Approx(delta / 2.0).epsilon(1e-10));
    }
    CHECK_THROWS_AS(theta_profile(c, 2.0, 0.0), ValidationError);
}

TEST_CASE("theta tail for the urban step cost stays within delta of the Modica-Mortola value") {
    const PhaseFieldCost c{urban_step()};
    const double top = 0.8;
    const double mm = 0.5 * modica_mortola_bound(c, top);
    for (double delta : {1e-2, 1e-4}) {
        const auto t = theta_profile(c, top, delta);
        CHECK(t.energy >= mm);
        CHECK(t.energy <= mm + delta);
    }
}

TEST_CASE("existence predicate") {
    const auto z = urban_step();
    CHECK_FALSE(exists_minimizer(z, 0.5).exists);
    CHECK(exists_minimizer(z, 2.0).exists);
    CHECK(exists_minimizer(z, 0.5).tau == doctest::Approx(0.5));
    // tau(1) = tau'(0) * 1 exactly at the kink
    CHECK_FALSE(exists_minimizer(z, 1.0).exists);
    const auto zp = power_law_z(0.26, -1.0);
    CHECK(exists_minimizer(zp, 0.3).exists);
    CHECK(exists_minimizer(zp, 5.0).exists);
    CHECK_FALSE(exists_minimizer(constant_z(2.0), 3.0).exists);
}

TEST_CASE("explicit level selection exposes the other minimizer at a kink") {
    const auto z = urban_step();
    CHECK_THROWS_AS(build_step_profile_at_level(z, 0.4, 2), NoMinimizer);
    CHECK_THROWS_AS(build_step_profile_at_level(z, 1.0, 1), NoMinimizer);
    const auto p = build_step_profile_at_level(z, 3.0, 2);
    CHECK(p.energy == doctest::Approx(2.0));
}

TEST_CASE("energy estimate bound formula") {
    CHECK(energy_estimate_bound(2.0, 4.0) == doctest::Approx(0.5));
    CHECK(energy_estimate_bound(1.0, 0.0) == 0.0);
}
