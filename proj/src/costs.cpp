#include "phasecost/costs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phasecost {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_w(double w) {
    if (!(w >= 0.0)) throw DomainError("transport cost evaluated at negative mass");
}

// index k with xs[k] <= x < xs[k+1], clamped to the last node
std::size_t segment_of(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - xs.begin()) - 1));
}

double sampled_slope(const SampledCost& s, std::size_t k) {
    const std::size_t n = s.w.size();
    if (k + 1 >= n) k = n - 2;
    return (s.tau[k + 1] - s.tau[k]) / (s.w[k + 1] - s.w[k]);
}

}  // namespace

TransportCost TransportCost::power(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("power cost needs alpha in (0,1)");
    return TransportCost(PowerCost{alpha});
}

TransportCost TransportCost::urban_planning(double a, double b, double d) {
    if (!(a > 0.0 && b >= 0.0 && a > b && d > 0.0))
        throw ValidationError("urban planning cost needs a > b >= 0 and d > 0");
    return TransportCost(UrbanPlanningCost{a, b, d});
}

TransportCost TransportCost::piecewise_affine(std::vector<double> breakpoints, std::vector<double> slopes) {
    if (breakpoints.empty() || breakpoints.size() != slopes.size())
        throw ValidationError("piecewise affine cost needs as many slopes as breakpoints");
    if (breakpoints[0] != 0.0) throw ValidationError("piecewise affine cost: first breakpoint must be 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1]) || !std::isfinite(breakpoints[i]))
            throw ValidationError("piecewise affine cost: breakpoints must be strictly increasing");
        if (!(slopes[i] < slopes[i - 1]))
            throw ValidationError("piecewise affine cost: slopes must be strictly decreasing");
    }
    for (double s : slopes)
        if (!std::isfinite(s) || s < 0.0) throw ValidationError("piecewise affine cost: slopes must be finite and >= 0");
    std::vector<double> values(breakpoints.size(), 0.0);
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        values[i] = values[i - 1] + slopes[i - 1] * (breakpoints[i] - breakpoints[i - 1]);
    return TransportCost(PiecewiseAffineCost{std::move(breakpoints), std::move(slopes), std::move(values)});
}

TransportCost TransportCost::sampled(std::vector<double> w, std::vector<double> tau) {
    if (w.size() < 2 || w.size() != tau.size()) throw ValidationError("sampled cost needs >= 2 matching samples");
    if (w[0] != 0.0) throw ValidationError("sampled cost: grid must start at w = 0");
    for (std::size_t i = 1; i < w.size(); ++i)
        if (!(w[i] > w[i - 1])) throw ValidationError("sampled cost: grid must be strictly increasing");
    for (double v : tau)
        if (!std::isfinite(v)) throw ValidationError("sampled cost: values must be finite");
    return TransportCost(SampledCost{std::move(w), std::move(tau)});
}

std::string TransportCost::kind() const {
    return std::visit(overloaded{[](const PowerCost&) { return std::string("power"); },
                                 [](const UrbanPlanningCost&) { return std::string("urban_planning"); },
                                 [](const PiecewiseAffineCost&) { return std::string("piecewise_affine"); },
                                 [](const SampledCost&) { return std::string("sampled"); }},
                      form_);
}

double eval_tau(const TransportCost& tau, double w) {
    check_w(w);
    return std::visit(
        overloaded{[&](const PowerCost& p) { return std::pow(w, p.alpha); },
                   [&](const UrbanPlanningCost& u) { return std::min(u.a * w, u.b * w + u.d); },
                   [&](const PiecewiseAffineCost& pa) {
                       const std::size_t k = segment_of(pa.breakpoints, w);
                       return pa.values[k] + pa.slopes[k] * (w - pa.breakpoints[k]);
                   },
                   [&](const SampledCost& s) {
                       std::size_t k = segment_of(s.w, w);
                       if (k + 1 >= s.w.size()) k = s.w.size() - 2;
                       return s.tau[k] + sampled_slope(s, k) * (w - s.w[k]);
                   }},
        tau.form());
}

double right_derivative(const TransportCost& tau, double w) {
    check_w(w);
    return std::visit(overloaded{[&](const PowerCost& p) {
                                     return w == 0.0 ? kInf : p.alpha * std::pow(w, p.alpha - 1.0);
                                 },
                                 [&](const UrbanPlanningCost& u) { return w < u.kink() ? u.a : u.b; },
                                 [&](const PiecewiseAffineCost& pa) { return pa.slopes[segment_of(pa.breakpoints, w)]; },
                                 [&](const SampledCost& s) { return sampled_slope(s, segment_of(s.w, w)); }},
                      tau.form());
}

double left_derivative(const TransportCost& tau, double w) {
    check_w(w);
    if (w == 0.0) return right_derivative(tau, w);
    return std::visit(overloaded{[&](const PowerCost& p) { return p.alpha * std::pow(w, p.alpha - 1.0); },
                                 [&](const UrbanPlanningCost& u) { return w <= u.kink() ? u.a : u.b; },
                                 [&](const PiecewiseAffineCost& pa) {
                                     auto it = std::lower_bound(pa.breakpoints.begin(), pa.breakpoints.end(), w);
                                     return pa.slopes[static_cast<std::size_t>(it - pa.breakpoints.begin()) - 1];
                                 },
                                 [&](const SampledCost& s) {
                                     auto it = std::lower_bound(s.w.begin(), s.w.end(), w);
                                     return sampled_slope(s, static_cast<std::size_t>(it - s.w.begin()) - 1);
                                 }},
                      tau.form());
}

double asymptotic_slope(const TransportCost& tau) {
    return std::visit(overloaded{[](const PowerCost&) { return 0.0; },
                                 [](const UrbanPlanningCost& u) { return u.b; },
                                 [](const PiecewiseAffineCost& pa) { return pa.slopes.back(); },
                                 [](const SampledCost& s) { return sampled_slope(s, s.w.size() - 2); }},
                      tau.form());
}

ConjugateValue conjugate(const TransportCost& tau, double t) {
    if (!(t >= 0.0)) throw DomainError("conjugate evaluated at negative slope");
    auto node_scan = [t](const std::vector<double>& w, const std::vector<double>& v, double last_slope) {
        if (t < last_slope) return kInf;
        double best = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) best = std::max(best, v[i] - t * w[i]);
        return best;
    };
    const double value = std::visit(
        overloaded{[&](const PowerCost& p) {
                       if (t == 0.0) return kInf;
                       return (1.0 - p.alpha) * std::pow(t / p.alpha, p.alpha / (p.alpha - 1.0));
                   },
                   [&](const UrbanPlanningCost& u) {
                       if (t < u.b) return kInf;
                       if (t >= u.a) return 0.0;
                       return u.d * (u.a - t) / (u.a - u.b);
                   },
                   [&](const PiecewiseAffineCost& pa) { return node_scan(pa.breakpoints, pa.values, pa.slopes.back()); },
                   [&](const SampledCost& s) { return node_scan(s.w, s.tau, sampled_slope(s, s.w.size() - 2)); }},
        tau.form());
    return {t, value};
}

TransportCost interpolate_affine(const TransportCost& tau, int level, double w_max) {
    if (level < 0) throw ValidationError("interpolation level must be nonnegative");
    if (!(w_max > 0.0)) throw ValidationError("interpolation range must be positive");
    const double h = std::ldexp(1.0, -level);
    const auto n = static_cast<std::size_t>(std::ceil(w_max / h - 1e-12));
    std::vector<double> bp{0.0}, sl;
    double prev = 0.0;
    const double tol = 1e-12;
    for (std::size_t i = 1; i <= n; ++i) {
        const double w = static_cast<double>(i) * h;
        const double v = eval_tau(tau, w);
        const double s = (v - prev) / h;
        prev = v;
        if (!sl.empty() && std::abs(s - sl.back()) <= tol * std::max(1.0, std::abs(s))) continue;
        if (!sl.empty() && s > sl.back()) throw ValidationError("interpolate_affine: input is not concave");
        if (!sl.empty()) bp.push_back(w - h);
        sl.push_back(s);
    }
    return TransportCost::piecewise_affine(std::move(bp), std::move(sl));
}

bool AdmissibilityReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check& AdmissibilityReport::get(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("no check named " + name);
}

AdmissibilityReport validate_admissible(const TransportCost& tau, const std::vector<double>& grid) {
    if (grid.size() < 3) throw ValidationError("validate_admissible needs at least 3 grid points");
    if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0)
        throw ValidationError("validate_admissible needs a sorted nonnegative grid");
    const bool sampled = tau.as<SampledCost>() != nullptr;
    const double ctol = sampled ? 1e-6 : 1e-9;

    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = eval_tau(tau, grid[i]);
    double scale = 1.0;
    for (double x : v) scale = std::max(scale, std::abs(x));

    AdmissibilityReport rep;
    const double at0 = eval_tau(tau, 0.0);
    rep.checks.push_back({"zero_at_origin", std::abs(at0) <= 1e-12 * scale, std::abs(at0), 1e-12 * scale});

    double worst_drop = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) worst_drop = std::max(worst_drop, v[i - 1] - v[i]);
    rep.checks.push_back({"nondecreasing", worst_drop <= ctol * scale, worst_drop, ctol * scale});

    // secant slopes must not increase; relative to the slope magnitude
    double worst_rise = 0.0;
    double prev_slope = 0.0;
    bool have_prev = false;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double dw = grid[i] - grid[i - 1];
        if (dw <= 0.0) continue;
        const double s = (v[i] - v[i - 1]) / dw;
        if (have_prev) {
            const double rel = (s - prev_slope) / std::max({1.0, std::abs(s), std::abs(prev_slope)});
            worst_rise = std::max(worst_rise, rel);
        }
        prev_slope = s;
        have_prev = true;
    }
    rep.checks.push_back({"concave", worst_rise <= ctol, worst_rise, ctol});

    // continuity at 0: values along w1 * 10^-k must decay
    double w1 = 0.0;
    for (double g : grid)
        if (g > 0.0) {
            w1 = g;
            break;
        }
    double ratio = 0.0;
    if (w1 > 0.0) {
        const double v0 = eval_tau(tau, w1) - at0;
        const double v12 = eval_tau(tau, w1 * 1e-12) - at0;
        ratio = v0 > 0.0 ? v12 / v0 : (v12 > 0.0 ? kInf : 0.0);
    }
    rep.checks.push_back({"continuous_at_zero", ratio <= 0.5, ratio, 0.5});
    return rep;
}

}  // namespace phasecost
