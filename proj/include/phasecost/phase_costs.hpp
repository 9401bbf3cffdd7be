#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "phasecost/common.hpp"

namespace phasecost {

// f = levels[i] on [thresholds[i], thresholds[i+1]), final_level on [thresholds.back(), inf).
// thresholds[0] = 0; levels strictly decreasing; only levels[0] may be +inf.
struct StepFunction {
    std::vector<double> thresholds;
    std::vector<double> levels;
    double final_level = 0.0;

    double operator()(double x) const;
    void validate() const;
    // all values in order, final level last
    std::vector<double> all_levels() const;
};

// Behaviour of a sampled function beyond its first/last node.
struct Extension {
    enum class Kind { Constant, PowerLaw };
    Kind kind = Kind::Constant;
    double value = 0.0;  // the constant, or the exponent p in f_end * (x_end / x)^p

    static Extension constant(double c) { return {Kind::Constant, c}; }
    static Extension power_law(double p) { return {Kind::PowerLaw, p}; }
    bool operator==(const Extension&) const = default;
};

// Piecewise-linear through (x_k, v_k), x_0 >= 0.
struct SampledMonotone {
    std::vector<double> x, v;
    Extension below = Extension::constant(kInf);
    Extension above = Extension::constant(0.0);

    double operator()(double s) const;
};

struct AnalyticMonotone {
    std::function<double(double)> f;
    double at_zero = kInf;      // lim_{x -> 0+}
    double at_infinity = 0.0;   // lim_{x -> inf}
    std::string name;           // for serialization; empty if not serializable
    std::map<std::string, double> params;
    std::vector<double> breaks;  // known points where f is not smooth
};

// Nonincreasing, lower semi-continuous function on [0, inf) with values in [0, +inf].
class MonotoneFunction {
public:
    using Form = std::variant<StepFunction, SampledMonotone, AnalyticMonotone>;

    MonotoneFunction() : form_(StepFunction{{0.0}, {}, 0.0}) {}
    explicit MonotoneFunction(StepFunction s);
    // Values are projected onto nonincreasing sequences (isotonic regression) when needed.
    explicit MonotoneFunction(SampledMonotone s);
    explicit MonotoneFunction(AnalyticMonotone a);

    double operator()(double x) const;
    double limit_at_zero() const;
    double limit_at_infinity() const;
    // one-sided slope f'(x+) (0 on step plateaus)
    double slope(double x) const;
    // points where the function is not smooth (step thresholds, sampled nodes)
    std::vector<double> kinks() const;

    const Form& form() const { return form_; }
    template <class T>
    const T* as() const { return std::get_if<T>(&form_); }
    bool is_step() const { return as<StepFunction>() != nullptr; }

private:
    Form form_;
};

// z(phi) = c(phi) / phi
class MassSpecificCost : public MonotoneFunction {
public:
    using MonotoneFunction::MonotoneFunction;
    explicit MassSpecificCost(MonotoneFunction f) : MonotoneFunction(std::move(f)) {}
};

// g(s) = (z^-1(s))^{3/2}
class GTransform : public MonotoneFunction {
public:
    using MonotoneFunction::MonotoneFunction;
    explicit GTransform(MonotoneFunction f) : MonotoneFunction(std::move(f)) {}
};

struct PhaseFieldCost {
    MassSpecificCost z;
};

std::vector<double> isotonic_nonincreasing(const std::vector<double>& v);

// f^-1(y) = inf{x >= 0 : f(x) <= y}, inf of the empty set = +inf.
MonotoneFunction generalized_inverse(const MonotoneFunction& f);
// f(x)^p, p > 0 (monotone reparametrization of values)
MonotoneFunction pow_values(const MonotoneFunction& f, double p);

GTransform g_from_z(const MassSpecificCost& z);
MassSpecificCost z_from_g(const GTransform& g);

double eval_c(const PhaseFieldCost& c, double phi);
// c'(phi+) = z + phi z'
double eval_c_slope(const PhaseFieldCost& c, double phi);

struct IntegrabilityResult {
    bool finite;
    double value;
};
// int_0^1 sqrt(c(phi)) dphi
IntegrabilityResult check_integrability(const PhaseFieldCost& c);

// common analytic z's
MassSpecificCost power_law_z(double coefficient, double exponent);
MassSpecificCost constant_z(double a);
// z = max(a - k phi^3, b) with k = (2 pi^2 / 9)((a - b) / d)^2, so that g = (3 / (sqrt2 pi))(d / (a - b)) sqrt(a - s)
MassSpecificCost urban_smooth_z(double a, double b, double d);
// threshold P = (1/2)(9 d^2 / (4 (a - b)))^{1/3}; z = a on [0, P), b after
MassSpecificCost urban_step_z(double a, double b, double d);
double urban_threshold(double a, double b, double d);

}  // namespace phasecost
