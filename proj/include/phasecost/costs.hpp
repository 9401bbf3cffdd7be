#pragma once

#include <string>
#include <variant>
#include <vector>

#include "phasecost/common.hpp"

namespace phasecost {

struct PowerCost {
    double alpha;
};

struct UrbanPlanningCost {
    double a, b, d;
    double kink() const { return d / (a - b); }
};

// breakpoints w_0 = 0 < w_1 < ... < w_N, slopes a_1 > ... > a_{N+1}; slope a_{k+1} applies on
// [w_k, w_{k+1}) and the last one on [w_N, inf).
struct PiecewiseAffineCost {
    std::vector<double> breakpoints;
    std::vector<double> slopes;
    std::vector<double> values;  // tau at each breakpoint
};

// Linear interpolation through (w_k, tau_k), w_0 = 0, continued with the last slope.
struct SampledCost {
    std::vector<double> w;
    std::vector<double> tau;
};

class TransportCost {
public:
    using Form = std::variant<PowerCost, UrbanPlanningCost, PiecewiseAffineCost, SampledCost>;

    static TransportCost power(double alpha);
    static TransportCost urban_planning(double a, double b, double d);
    static TransportCost piecewise_affine(std::vector<double> breakpoints, std::vector<double> slopes);
    static TransportCost sampled(std::vector<double> w, std::vector<double> tau);

    const Form& form() const { return form_; }
    template <class T>
    const T* as() const { return std::get_if<T>(&form_); }
    std::string kind() const;

private:
    explicit TransportCost(Form f) : form_(std::move(f)) {}
    Form form_;
};

struct ConjugateValue {
    double t;
    double value;  // may be +inf
    bool is_infinite() const { return value == kInf; }
};

double eval_tau(const TransportCost& tau, double w);
double right_derivative(const TransportCost& tau, double w);
// Left derivative for w > 0; at w = 0 it coincides with the right derivative.
double left_derivative(const TransportCost& tau, double w);
ConjugateValue conjugate(const TransportCost& tau, double t);
// inf{t : conjugate(t) < inf}, i.e. lim_{w->inf} tau'(w).
double asymptotic_slope(const TransportCost& tau);

// Dyadic interpolant with nodes i/2^n on [0, w_max] (w_max rounded up to the grid).
TransportCost interpolate_affine(const TransportCost& tau, int level, double w_max = 1.0);

struct Check {
    std::string name;
    bool passed;
    double measured;
    double tolerance;
};

struct AdmissibilityReport {
    std::vector<Check> checks;
    bool all_passed() const;
    const Check& get(const std::string& name) const;
};

AdmissibilityReport validate_admissible(const TransportCost& tau, const std::vector<double>& grid);

}  // namespace phasecost
