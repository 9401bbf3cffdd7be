#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "phasecost/phase_costs.hpp"

namespace phasecost::oracle {

// Discrete min of int |phi'|^2 on [0, T] with fixed ends and trapezoid mass w.
// Returns +inf if the unconstrained optimum dips below 0.
inline double brute_segment(double pl, double pr, double w, double T, int M = 2000) {
    const double h = T / M;
    const int n = M - 1;
    auto thomas = [&](std::vector<double> rhs) {
        std::vector<double> c(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
        c[0] = -0.5;
        rhs[0] /= 2.0;
        for (int i = 1; i < n; ++i) {
            const double den = 2.0 + c[static_cast<std::size_t>(i - 1)];
            c[static_cast<std::size_t>(i)] = -1.0 / den;
            rhs[static_cast<std::size_t>(i)] = (rhs[static_cast<std::size_t>(i)] + rhs[static_cast<std::size_t>(i - 1)]) / den;
        }
        x[static_cast<std::size_t>(n - 1)] = rhs[static_cast<std::size_t>(n - 1)];
        for (int i = n - 2; i >= 0; --i)
            x[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i + 1)];
        return x;
    };
    std::vector<double> b(static_cast<std::size_t>(n), 0.0), one(static_cast<std::size_t>(n), 1.0);
    b.front() += pl;
    b.back() += pr;
    const auto x1 = thomas(b), x2 = thomas(one);
    double m1 = h * 0.5 * (pl + pr), m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        m1 += h * x1[static_cast<std::size_t>(i)];
        m2 += h * x2[static_cast<std::size_t>(i)];
    }
    const double nu = (w - m1) / m2;
    std::vector<double> phi{pl};
    for (int i = 0; i < n; ++i) phi.push_back(x1[static_cast<std::size_t>(i)] + nu * x2[static_cast<std::size_t>(i)]);
    phi.push_back(pr);
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < phi.size(); ++k) {
        if (phi[k] < 0.0) return kInf;
        e += (phi[k + 1] - phi[k]) * (phi[k + 1] - phi[k]) / h;
    }
    return e;
}

inline double brute_segment_over_T(double pl, double pr, double w, double T_guess) {
    double a = 0.2 * T_guess, b = 5.0 * T_guess;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = brute_segment(pl, pr, w, x1), f2 = brute_segment(pl, pr, w, x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 <= f2) {
            b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = brute_segment(pl, pr, w, x1);
        } else {
            a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = brute_segment(pl, pr, w, x2);
        }
    }
    return std::min(f1, f2);
}

// random nonincreasing step with up to max_levels finite levels (plus the final level)
inline StepFunction random_step(std::mt19937_64& rng, int max_levels, bool compact = false) {
    std::uniform_int_distribution<int> nk(0, max_levels - 1);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    StepFunction s;
    s.thresholds = {0.0};
    const int K = nk(rng);
    for (int i = 0; i < K; ++i) s.thresholds.push_back(s.thresholds.back() + u(rng));
    double level = compact ? 0.0 : u(rng);
    s.final_level = level;
    std::vector<double> lv;
    for (int i = 0; i < K; ++i) lv.push_back(level += u(rng));
    s.levels.assign(lv.rbegin(), lv.rend());
    return s;
}

}  // namespace phasecost::oracle
