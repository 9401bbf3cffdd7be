#include <doctest.h>

#include <cmath>
#include <random>

#include "phasecost/io.hpp"
#include "phasecost/phase_costs.hpp"
#include "phasecost/quadrature.hpp"

using namespace phasecost;

namespace {

// Independent oracle: inf{y : f(y) <= x} by scanning a fine grid.
double inverse_by_scan(const MonotoneFunction& f, double x, double y_max) {
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
        const double y = y_max * i / n;
        if (f(y) <= x) return y;
    }
    return kInf;
}

StepFunction random_step(std::mt19937_64& rng, bool allow_inf, bool compact) {
    std::uniform_int_distribution<int> nk(0, 5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const int K = nk(rng);
    StepFunction s;
    s.thresholds.push_back(0.0);
    for (int i = 0; i < K; ++i) s.thresholds.push_back(s.thresholds.back() + u(rng));
    double level = compact ? 0.0 : u(rng);
    s.final_level = level;
    std::vector<double> lv;
    for (int i = 0; i < K; ++i) {
        level += u(rng);
        lv.push_back(level);
    }
    s.levels.assign(lv.rbegin(), lv.rend());
    if (allow_inf && K > 0 && rng() % 3 == 0) s.levels[0] = kInf;
    return s;
}

}  // namespace

TEST_CASE("step inverse on the two-interval example") {
    MonotoneFunction z(StepFunction{{0.0, 1.0}, {2.0}, 0.0});
    auto inv = generalized_inverse(z);
    const auto& s = *inv.as<StepFunction>();
    CHECK(s.thresholds == std::vector<double>{0.0, 2.0});
    CHECK(s.levels == std::vector<double>{1.0});
    CHECK(s.final_level == 0.0);
    CHECK(inv(2.0) == 0.0);
    CHECK(inv(1.99) == 1.0);
    CHECK(inv(0.0) == 1.0);
}

TEST_CASE("sampled ramp inverse") {
    MonotoneFunction ramp(SampledMonotone{{0.0, 1.0}, {1.0, 0.0}, Extension::constant(kInf), Extension::constant(0.0)});
    auto inv = generalized_inverse(ramp);
    for (double x : {0.0, 0.2, 0.5, 0.9, 1.0, 1.5, 3.0})
        CHECK(inv(x) == doctest::Approx(x <= 1.0 ? 1.0 - x : 0.0));
}

TEST_CASE("step inverse matches the inf definition") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        MonotoneFunction f(random_step(rng, true, false));
        auto inv = generalized_inverse(f);
        const auto& s = *f.as<StepFunction>();
        const double ymax = s.thresholds.back() + 1.0;
        for (double x : {0.0, 0.1, 0.37, 0.8, 1.3, 2.2, 4.0}) {
            const double oracle = inverse_by_scan(f, x, ymax);
            const double got = inv(x);
            if (std::isinf(oracle))
                CHECK(std::isinf(got));
            else
                CHECK(got == doctest::Approx(oracle).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("involution and equal integrals on random steps") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const bool compact = trial % 2 == 0;
        StepFunction s = random_step(rng, !compact, compact);
        MonotoneFunction f(s);
        auto back = generalized_inverse(generalized_inverse(f));
        const auto& b = *back.as<StepFunction>();
        CHECK(b.thresholds == s.thresholds);
        CHECK(b.levels == s.levels);
        CHECK(b.final_level == s.final_level);
        if (compact) {
            auto inv = generalized_inverse(f);
            const auto& is = *inv.as<StepFunction>();
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < s.levels.size(); ++i) lhs += s.levels[i] * (s.thresholds[i + 1] - s.thresholds[i]);
            for (std::size_t i = 0; i < is.levels.size(); ++i) rhs += is.levels[i] * (is.thresholds[i + 1] - is.thresholds[i]);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("sampled inverse is an involution up to rounding") {
    MonotoneFunction f(SampledMonotone{{0.5, 1.0, 2.0, 3.0}, {3.0, 2.0, 2.0, 0.5},
                                       Extension::constant(kInf), Extension::power_law(2.0)});
    auto ff = generalized_inverse(generalized_inverse(f));
    for (double x : {0.6, 0.9, 1.5, 2.5, 3.0, 5.0, 10.0}) CHECK(ff(x) == doctest::Approx(f(x)).epsilon(1e-9));
    auto inv = generalized_inverse(f);
    for (double y = 0.05; y < 6.0; y += 0.1) {
        const double o = inverse_by_scan(f, y, 40.0);
        CHECK(inv(y) == doctest::Approx(o).epsilon(1e-3).scale(1.0));
    }
    double prev = kInf;
    for (double y = 0.0; y < 6.0; y += 0.01) {
        CHECK(inv(y) <= prev);
        prev = inv(y);
    }
}

TEST_CASE("isotonic projection") {
    auto v = isotonic_nonincreasing({3.0, 1.0, 2.0, 0.5});
    CHECK(v == std::vector<double>{3.0, 1.5, 1.5, 0.5});
    MonotoneFunction f(SampledMonotone{{0, 1, 2, 3}, {3.0, 1.0, 2.0, 0.5}, Extension::constant(kInf), Extension::constant(0.5)});
    CHECK(f(1.0) == 1.5);
}

TEST_CASE("g transform of the urban planning step") {
    const double a = 1.0, b = 0.5, d = 0.5;
    auto z = urban_step_z(a, b, d);
    const double P = urban_threshold(a, b, d);
    CHECK(P == doctest::Approx(0.5200209558).epsilon(1e-9));
    CHECK(P == doctest::Approx(std::pow(3.0 / 8.0, 2.0 / 3.0)).epsilon(1e-14));
    auto g = g_from_z(z);
    CHECK(std::isinf(g(0.3)));
    CHECK(g(0.5) == doctest::Approx(std::pow(P, 1.5)));
    CHECK(g(0.9) == doctest::Approx(std::pow(P, 1.5)));
    CHECK(g(1.0) == 0.0);
    auto zz = z_from_g(g);
    CHECK(zz.as<StepFunction>()->thresholds == z.as<StepFunction>()->thresholds);
    CHECK(zz.as<StepFunction>()->levels == z.as<StepFunction>()->levels);
    CHECK(zz.as<StepFunction>()->final_level == z.as<StepFunction>()->final_level);

    auto za = constant_z(2.0);
    auto ga = g_from_z(za);
    CHECK(std::isinf(ga(1.9)));
    CHECK(ga(2.0) == 0.0);
    auto z0 = z_from_g(GTransform(StepFunction{{0.0}, {}, 0.0}));
    CHECK(z0(0.3) == 0.0);
    CHECK(z0(7.0) == 0.0);
}

TEST_CASE("g transform of a hyperbola") {
    const double c0 = 0.26;
    auto z = power_law_z(c0, -1.0);
    auto g = g_from_z(z);
    for (double s : {0.1, 0.5, 2.0}) CHECK(g(s) == doctest::Approx(std::pow(c0 / s, 1.5)).epsilon(1e-12));
    auto zz = z_from_g(g);
    for (double phi : {0.05, 0.3, 1.0, 4.0}) CHECK(zz(phi) == doctest::Approx(z(phi)).epsilon(1e-10));
}

TEST_CASE("power-law g recovers the closed-form c") {
    // g = K s^-beta  ->  c = K^{2(1-a)/(1+a)} phi^{2(2a-1)/(1+a)}
    for (double alpha : {0.5, 0.75}) {
        const double q = alpha / (1.0 - alpha);
        const double K = std::pow(alpha, 1.0 / (1.0 - alpha)) / std::sqrt(2.0 * M_PI) * 3.0 * std::tgamma(0.5 + q) /
                         (2.0 * std::tgamma(1.0 + q));
        const double beta = 0.5 + q;
        AnalyticMonotone ga;
        ga.f = [K, beta](double s) { return K * std::pow(s, -beta); };
        auto z = z_from_g(GTransform(std::move(ga)));
        PhaseFieldCost c{z};
        const double e = 2.0 * (2.0 * alpha - 1.0) / (1.0 + alpha);
        for (double phi : {0.1, 0.5, 2.0})
            CHECK(eval_c(c, phi) ==
                  doctest::Approx(std::pow(K, 2.0 * (1.0 - alpha) / (1.0 + alpha)) * std::pow(phi, e)).epsilon(1e-10));
    }
}

TEST_CASE("eval_c") {
    PhaseFieldCost c{urban_step_z(1.0, 0.5, 0.5)};
    CHECK(eval_c(c, 0.25) == doctest::Approx(0.25));
    CHECK(eval_c(c, 1.0) == doctest::Approx(0.5));
    CHECK(eval_c(c, 0.0) == 0.0);
    CHECK_THROWS_AS(eval_c(c, -0.1), DomainError);
    PhaseFieldCost s{urban_smooth_z(1.0, 0.5, 0.5)};
    const double k = 2.0 * M_PI * M_PI / 9.0;
    for (double phi : {0.1, 0.4, 0.7, 1.5})
        CHECK(eval_c(s, phi) == doctest::Approx(std::max(phi - k * std::pow(phi, 4), 0.5 * phi)));
    PhaseFieldCost h{power_law_z(0.26, -1.0)};
    CHECK(eval_c(h, 0.0) == 0.0);
    CHECK(eval_c(h, 1e-9) == doctest::Approx(0.26));
}

TEST_CASE("integrability") {
    const double e = 2.0 * 0.5 / 1.75;
    auto r = check_integrability({power_law_z(0.525, e - 1.0)});
    CHECK(r.finite);
    CHECK(r.value == doctest::Approx(std::sqrt(0.525) / (e / 2.0 + 1.0)).epsilon(1e-9));
    CHECK_FALSE(check_integrability({power_law_z(1.0, -4.0)}).finite);
    auto zero = check_integrability({constant_z(0.0)});
    CHECK(zero.finite);
    CHECK(zero.value == 0.0);
    auto step = check_integrability({urban_step_z(1.0, 0.5, 0.5)});
    const double P = urban_threshold(1.0, 0.5, 0.5);
    CHECK(step.value == doctest::Approx(2.0 / 3.0 * std::pow(P, 1.5) + std::sqrt(0.5) * 2.0 / 3.0 * (1.0 - std::pow(P, 1.5))).epsilon(1e-10));
}

TEST_CASE("json round trip for z") {
    auto z = urban_step_z(1.0, 0.5, 0.5);
    auto j = io::to_json(z);
    CHECK(j["type"] == "step");
    auto back = io::mass_specific_cost_from_json(j);
    CHECK(back.as<StepFunction>()->thresholds == z.as<StepFunction>()->thresholds);
    auto g = g_from_z(z);
    auto jg = io::to_json(MassSpecificCost(static_cast<const MonotoneFunction&>(g)));
    CHECK(jg["levels"][0] == "inf");
    auto gb = io::mass_specific_cost_from_json(jg);
    CHECK(std::isinf(gb(0.2)));
    auto pl = io::mass_specific_cost_from_json(io::json::parse(R"({"type":"analytic","name":"power_law","coefficient":0.26,"exponent":-1})"));
    CHECK(pl(2.0) == doctest::Approx(0.13));
    auto sm = io::mass_specific_cost_from_json(io::to_json(urban_smooth_z(1, 0.5, 0.5)));
    CHECK(sm(0.1) == doctest::Approx(urban_smooth_z(1, 0.5, 0.5)(0.1)));
    CHECK_THROWS_AS(io::mass_specific_cost_from_json(io::json::parse(R"({"type":"step","thresholds":[0,1],"levels":[0.5],"final_level":1})")),
                    ValidationError);
}
