#include "phasecost/phase_costs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phasecost/quadrature.hpp"

namespace phasecost {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double down(double v) { return std::nextafter(v, -kInf); }
double up(double v) { return std::nextafter(v, kInf); }

}  // namespace

// ---- StepFunction ---------------------------------------------------------

double StepFunction::operator()(double x) const {
    if (!(x >= 0.0)) throw DomainError("step function evaluated at negative argument");
    auto it = std::upper_bound(thresholds.begin(), thresholds.end(), x);
    const auto idx = static_cast<std::size_t>(it - thresholds.begin()) - 1;
    return idx < levels.size() ? levels[idx] : final_level;
}

void StepFunction::validate() const {
    if (thresholds.empty() || thresholds[0] != 0.0) throw ValidationError("step function: thresholds must start at 0");
    if (thresholds.size() != levels.size() + 1)
        throw ValidationError("step function: need one more threshold than levels");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i] > thresholds[i - 1]) || !std::isfinite(thresholds[i]))
            throw ValidationError("step function: thresholds must be finite and strictly increasing");
    if (!std::isfinite(final_level)) throw ValidationError("step function: final level must be finite");
    const auto all = all_levels();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!(all[i] >= 0.0)) throw ValidationError("step function: levels must be nonnegative");
        if (i > 0 && !std::isfinite(all[i])) throw ValidationError("step function: only the first level may be inf");
        if (i > 0 && !(all[i] < all[i - 1])) throw ValidationError("step function: levels must be strictly decreasing");
    }
}

std::vector<double> StepFunction::all_levels() const {
    std::vector<double> out = levels;
    out.push_back(final_level);
    return out;
}

// ---- SampledMonotone ------------------------------------------------------

double SampledMonotone::operator()(double s) const {
    if (!(s >= 0.0)) throw DomainError("sampled function evaluated at negative argument");
    const std::size_t n = x.size();
    if (s < x.front()) {
        if (below.kind == Extension::Kind::Constant) return below.value;
        if (v.front() == 0.0) return 0.0;
        if (s == 0.0) return kInf;
        return v.front() * std::pow(x.front() / s, below.value);
    }
    if (s > x.back()) {
        if (above.kind == Extension::Kind::Constant) return above.value;
        return v.back() * std::pow(x.back() / s, above.value);
    }
    if (n == 1) return v[0];
    auto it = std::upper_bound(x.begin(), x.end(), s);
    std::size_t k = static_cast<std::size_t>(it - x.begin());
    if (k >= n) return v.back();
    const std::size_t j = k - 1;
    const double f = (s - x[j]) / (x[k] - x[j]);
    return v[j] + f * (v[k] - v[j]);
}

// ---- MonotoneFunction -----------------------------------------------------

std::vector<double> isotonic_nonincreasing(const std::vector<double>& v) {
    // pool adjacent violators
    std::vector<double> mean;
    std::vector<std::size_t> count;
    for (double x : v) {
        mean.push_back(x);
        count.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] < mean.back()) {
            const std::size_t c1 = count[count.size() - 2], c2 = count.back();
            const double m = (mean[mean.size() - 2] * c1 + mean.back() * c2) / static_cast<double>(c1 + c2);
            mean.pop_back();
            count.pop_back();
            mean.back() = m;
            count.back() = c1 + c2;
        }
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < mean.size(); ++i) out.insert(out.end(), count[i], mean[i]);
    return out;
}

MonotoneFunction::MonotoneFunction(StepFunction s) : form_(std::move(s)) {
    std::get<StepFunction>(form_).validate();
}

MonotoneFunction::MonotoneFunction(SampledMonotone s) {
    if (s.x.empty() || s.x.size() != s.v.size()) throw ValidationError("sampled function: need matching nonempty samples");
    if (!(s.x[0] >= 0.0)) throw ValidationError("sampled function: grid must be nonnegative");
    for (std::size_t i = 1; i < s.x.size(); ++i)
        if (!(s.x[i] > s.x[i - 1])) throw ValidationError("sampled function: grid must be strictly increasing");
    for (double val : s.v)
        if (!std::isfinite(val) || val < 0.0) throw ValidationError("sampled function: values must be finite and >= 0");
    auto check_ext = [](const Extension& e) {
        if (e.kind == Extension::Kind::PowerLaw && !(e.value > 0.0 && std::isfinite(e.value)))
            throw ValidationError("sampled function: power-law extension needs a positive exponent");
        if (e.kind == Extension::Kind::Constant && !(e.value >= 0.0))
            throw ValidationError("sampled function: constant extension must be >= 0");
    };
    check_ext(s.below);
    check_ext(s.above);
    if (!std::is_sorted(s.v.rbegin(), s.v.rend())) s.v = isotonic_nonincreasing(s.v);
    if (s.below.kind == Extension::Kind::Constant && s.below.value < s.v.front())
        throw ValidationError("sampled function: lower extension below first value breaks monotonicity");
    if (s.above.kind == Extension::Kind::Constant && s.above.value > s.v.back())
        throw ValidationError("sampled function: upper extension above last value breaks monotonicity");
    form_ = std::move(s);
}

MonotoneFunction::MonotoneFunction(AnalyticMonotone a) {
    if (!a.f) throw ValidationError("analytic function: missing closure");
    form_ = std::move(a);
}

double MonotoneFunction::operator()(double x) const {
    return std::visit(overloaded{[&](const StepFunction& s) { return s(x); },
                                 [&](const SampledMonotone& s) { return s(x); },
                                 [&](const AnalyticMonotone& a) {
                                     if (!(x >= 0.0)) throw DomainError("analytic function evaluated at negative argument");
                                     return x == 0.0 ? a.at_zero : a.f(x);
                                 }},
                      form_);
}

double MonotoneFunction::limit_at_zero() const {
    return std::visit(overloaded{[](const StepFunction& s) { return s.levels.empty() ? s.final_level : s.levels[0]; },
                                 [](const SampledMonotone& s) {
                                     if (s.x.front() == 0.0) return s.v.front();
                                     if (s.below.kind == Extension::Kind::Constant) return s.below.value;
                                     return s.v.front() > 0.0 ? kInf : 0.0;
                                 },
                                 [](const AnalyticMonotone& a) { return a.at_zero; }},
                      form_);
}

double MonotoneFunction::limit_at_infinity() const {
    return std::visit(overloaded{[](const StepFunction& s) { return s.final_level; },
                                 [](const SampledMonotone& s) {
                                     return s.above.kind == Extension::Kind::Constant ? s.above.value : 0.0;
                                 },
                                 [](const AnalyticMonotone& a) { return a.at_infinity; }},
                      form_);
}

double MonotoneFunction::slope(double x) const {
    return std::visit(overloaded{[](const StepFunction&) { return 0.0; },
                                 [&](const SampledMonotone& s) {
                                     if (x < s.x.front()) {
                                         if (s.below.kind == Extension::Kind::Constant) return 0.0;
                                         return -s.below.value * s(x) / x;
                                     }
                                     if (x >= s.x.back()) {
                                         if (s.above.kind == Extension::Kind::Constant) return 0.0;
                                         return -s.above.value * s(x) / x;
                                     }
                                     auto it = std::upper_bound(s.x.begin(), s.x.end(), x);
                                     const auto k = static_cast<std::size_t>(it - s.x.begin());
                                     return (s.v[k] - s.v[k - 1]) / (s.x[k] - s.x[k - 1]);
                                 },
                                 [&](const AnalyticMonotone& a) {
                                     const double h = 1e-6 * std::max(std::abs(x), 1e-12);
                                     const double lo = std::max(x - h, 0.5 * x);
                                     return (a.f(x + h) - a.f(lo)) / (x + h - lo);
                                 }},
                      form_);
}

std::vector<double> MonotoneFunction::kinks() const {
    return std::visit(overloaded{[](const StepFunction& s) {
                                     return std::vector<double>(s.thresholds.begin() + 1, s.thresholds.end());
                                 },
                                 [](const SampledMonotone& s) { return s.x; },
                                 [](const AnalyticMonotone& a) { return a.breaks; }},
                      form_);
}

// ---- generalized inverse --------------------------------------------------

namespace {

StepFunction invert_step(const StepFunction& f) {
    // f = v_i on [x_{i-1}, x_i), i = 1..K; v_{K+1} after x_K
    const auto& x = f.thresholds;
    const auto v = f.all_levels();
    const std::size_t K = f.levels.size();
    StepFunction out;
    out.thresholds.push_back(0.0);
    if (v[K] > 0.0) {
        out.levels.push_back(kInf);
        out.thresholds.push_back(v[K]);
    }
    // on [v_{i+1}, v_i) the inverse is x_i, for i = K..1
    for (std::size_t i = K; i >= 1; --i) {
        if (i == 1 && !std::isfinite(v[0])) {
            out.final_level = x[1];
            return out;
        }
        out.levels.push_back(x[i]);
        out.thresholds.push_back(v[i - 1]);
    }
    out.final_level = 0.0;
    return out;
}

SampledMonotone normalize(SampledMonotone s) {
    // fold a finite constant below x_0 into explicit nodes
    if (s.x.front() > 0.0 && s.below.kind == Extension::Kind::Constant && std::isfinite(s.below.value)) {
        std::vector<double> nx{0.0}, nv{s.below.value};
        if (s.below.value != s.v.front()) {
            nx.push_back(down(s.x.front()));
            nv.push_back(s.below.value);
        }
        nx.insert(nx.end(), s.x.begin(), s.x.end());
        nv.insert(nv.end(), s.v.begin(), s.v.end());
        s.x = std::move(nx);
        s.v = std::move(nv);
    }
    if (s.above.kind == Extension::Kind::Constant && s.above.value < s.v.back()) {
        s.x.push_back(up(s.x.back()));
        s.v.push_back(s.above.value);
    }
    return s;
}

SampledMonotone invert_sampled(SampledMonotone s) {
    s = normalize(std::move(s));
    const std::size_t n = s.x.size();
    const bool above_const = s.above.kind == Extension::Kind::Constant;

    // runs of equal values, scanned from the smallest value upward
    std::vector<double> ny, nx;
    std::size_t end = n;
    bool first = true;
    while (end > 0) {
        std::size_t start = end - 1;
        while (start > 0 && s.v[start - 1] == s.v[end - 1]) --start;
        const double V = s.v[start];
        const double xs = s.x[start], xe = s.x[end - 1];
        // just below V the inverse has reached the right end of the run
        if (xs < xe && !(first && above_const)) {
            const double yb = down(V);
            if (ny.empty() || yb > ny.back()) {
                ny.push_back(yb);
                nx.push_back(xe);
            }
        }
        if (ny.empty() || V > ny.back()) {
            ny.push_back(V);
            nx.push_back(xs);
        } else {
            nx.back() = xs;
        }
        first = false;
        end = start;
    }

    SampledMonotone out;
    out.x = std::move(ny);
    out.v = std::move(nx);
    out.below = above_const ? Extension::constant(kInf) : Extension::power_law(1.0 / s.above.value);
    if (s.x.front() == 0.0)
        out.above = Extension::constant(0.0);
    else if (s.below.kind == Extension::Kind::Constant)
        out.above = Extension::constant(s.x.front());
    else
        out.above = Extension::power_law(1.0 / s.below.value);
    return out;
}

double analytic_inverse_at(const AnalyticMonotone& a, double y) {
    if (y >= a.at_zero) return 0.0;
    auto f = [&](double x) { return x == 0.0 ? a.at_zero : a.f(x); };
    double hi = 1.0;
    while (f(hi) > y) {
        hi *= 2.0;
        if (hi > 1e300) return kInf;
    }
    double lo = hi * 0.5;
    while (f(lo) <= y) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        (f(mid) <= y ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

MonotoneFunction generalized_inverse(const MonotoneFunction& f) {
    return std::visit(overloaded{[](const StepFunction& s) { return MonotoneFunction(invert_step(s)); },
                                 [](const SampledMonotone& s) { return MonotoneFunction(invert_sampled(s)); },
                                 [](const AnalyticMonotone& a) {
                                     AnalyticMonotone inv;
                                     inv.f = [a](double y) { return analytic_inverse_at(a, y); };
                                     inv.at_zero = analytic_inverse_at(a, 0.0);
                                     inv.at_infinity = 0.0;
                                     // nonsmooth points of the inverse are the values at those of f
                                     for (double v : {a.at_zero, a.at_infinity})
                                         if (std::isfinite(v) && v > 0.0) inv.breaks.push_back(v);
                                     for (double x : a.breaks) {
                                         const double v = x == 0.0 ? a.at_zero : a.f(x);
                                         if (std::isfinite(v) && v > 0.0) inv.breaks.push_back(v);
                                     }
                                     std::sort(inv.breaks.begin(), inv.breaks.end());
                                     inv.breaks.erase(std::unique(inv.breaks.begin(), inv.breaks.end()), inv.breaks.end());
                                     return MonotoneFunction(std::move(inv));
                                 }},
                      f.form());
}

MonotoneFunction pow_values(const MonotoneFunction& f, double p) {
    if (!(p > 0.0)) throw DomainError("pow_values needs a positive exponent");
    auto pw = [p](double v) { return v == kInf ? kInf : std::pow(v, p); };
    return std::visit(overloaded{[&](const StepFunction& s) {
                                     StepFunction o = s;
                                     for (double& l : o.levels) l = pw(l);
                                     o.final_level = pw(o.final_level);
                                     return MonotoneFunction(std::move(o));
                                 },
                                 [&](const SampledMonotone& s) {
                                     SampledMonotone o = s;
                                     for (double& l : o.v) l = pw(l);
                                     for (Extension* e : {&o.below, &o.above})
                                         e->value = e->kind == Extension::Kind::Constant ? pw(e->value) : e->value * p;
                                     return MonotoneFunction(std::move(o));
                                 },
                                 [&](const AnalyticMonotone& a) {
                                     AnalyticMonotone o;
                                     o.f = [g = a.f, pw](double x) { return pw(g(x)); };
                                     o.at_zero = pw(a.at_zero);
                                     o.at_infinity = pw(a.at_infinity);
                                     o.breaks = a.breaks;
                                     return MonotoneFunction(std::move(o));
                                 }},
                      f.form());
}

GTransform g_from_z(const MassSpecificCost& z) { return GTransform(pow_values(generalized_inverse(z), 1.5)); }

MassSpecificCost z_from_g(const GTransform& g) {
    return MassSpecificCost(generalized_inverse(pow_values(g, 2.0 / 3.0)));
}

double eval_c(const PhaseFieldCost& c, double phi) {
    if (!(phi >= 0.0)) throw DomainError("phase field cost evaluated at negative density");
    if (phi == 0.0) return 0.0;
    return phi * c.z(phi);
}

double eval_c_slope(const PhaseFieldCost& c, double phi) {
    if (phi <= 0.0) return c.z.limit_at_zero();
    return c.z(phi) + phi * c.z.slope(phi);
}

IntegrabilityResult check_integrability(const PhaseFieldCost& c) {
    auto f = [&](double phi) { return std::sqrt(eval_c(c, phi)); };
    if (!std::isfinite(c.z(std::ldexp(1.0, -1000)))) {
        // z = +inf on a whole interval next to 0
        for (double phi : {1e-12, 1e-6, 1e-3, 0.5})
            if (!std::isfinite(c.z(phi))) return {false, kInf};
    }
    try {
        auto r = quad::integrate_from_zero(f, 1.0, {}, c.z.kinks());
        if (!std::isfinite(r.value)) return {false, kInf};
        return {true, r.value};
    } catch (const NumericError&) {
        return {false, kInf};
    }
}

// ---- common analytic forms -------------------------------------------------

MassSpecificCost power_law_z(double coefficient, double exponent) {
    if (!(coefficient > 0.0) || exponent > 0.0)
        throw ValidationError("power-law z needs a positive coefficient and a nonpositive exponent");
    AnalyticMonotone a;
    a.f = [coefficient, exponent](double phi) { return coefficient * std::pow(phi, exponent); };
    a.at_zero = exponent < 0.0 ? kInf : coefficient;
    a.at_infinity = exponent < 0.0 ? 0.0 : coefficient;
    a.name = "power_law";
    a.params = {{"coefficient", coefficient}, {"exponent", exponent}};
    return MassSpecificCost(std::move(a));
}

MassSpecificCost constant_z(double a) { return MassSpecificCost(StepFunction{{0.0}, {}, a}); }

MassSpecificCost urban_smooth_z(double a, double b, double d) {
    if (!(a > b && b >= 0.0 && d > 0.0)) throw ValidationError("urban planning z needs a > b >= 0, d > 0");
    const double k = (2.0 * std::numbers::pi * std::numbers::pi / 9.0) * ((a - b) / d) * ((a - b) / d);
    AnalyticMonotone m;
    m.f = [a, b, k](double phi) { return std::max(a - k * phi * phi * phi, b); };
    m.at_zero = a;
    m.at_infinity = b;
    m.breaks = {std::cbrt((a - b) / k)};
    m.name = "urban_smooth";
    m.params = {{"a", a}, {"b", b}, {"d", d}};
    return MassSpecificCost(std::move(m));
}

double urban_threshold(double a, double b, double d) { return 0.5 * std::cbrt(9.0 * d * d / (4.0 * (a - b))); }

MassSpecificCost urban_step_z(double a, double b, double d) {
    if (!(a > b && b >= 0.0 && d > 0.0)) throw ValidationError("urban planning z needs a > b >= 0, d > 0");
    return MassSpecificCost(StepFunction{{0.0, urban_threshold(a, b, d)}, {a}, b});
}

}  // namespace phasecost
