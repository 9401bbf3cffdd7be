#pragma once

#include <string>
#include <vector>

#include "phasecost/costs.hpp"
#include "phasecost/phase_costs.hpp"

namespace phasecost {

// Step z whose closed-form cost is the given piecewise-affine tau.
MassSpecificCost invert_piecewise_affine(const TransportCost& tau);

enum class UrbanVariant { Step, Smooth };

PhaseFieldCost analytic_inverse(const TransportCost& tau, UrbanVariant variant = UrbanVariant::Step);

// g = K s^-beta for the power cost, with beta = 1/2 + alpha/(1-alpha)
double power_g_coefficient(double alpha);
double power_g_exponent(double alpha);
GTransform power_g(double alpha);
// g = (3/(sqrt2 pi))(d/(a-b)) sqrt(a-s) on [b, a], +inf below b, 0 above a
GTransform urban_g(double a, double b, double d);

// r(s) = 2 sqrt2 / (3 sqrt(-s)) for s < 0, else 0
double abel_kernel(double s);

// [g*r](t) = (4/3) int_0^inf g(t + q^2/2) dq
double abel_forward(const GTransform& g, double t);

struct DeconvolutionProblem {
    std::vector<double> t;    // strictly increasing slope grid
    std::vector<double> rhs;  // conjugate values at t
    // rows where the equation is imposed; empty means all. Unconstrained nodes are
    // filled by linear interpolation between their constrained neighbours.
    std::vector<bool> constrained;
    double regularization = 0.0;
    // true when the conjugate is +inf below t.front(), so g = +inf there
    bool infinite_below = true;
    double residual_tol = 1e-6;
};

struct DeconvolutionResult {
    GTransform g;
    std::vector<double> t, g_values;
    double residual = 0.0;        // max |[g*r](t_k) - rhs_k| / max(1, max |rhs|) over constrained rows
    double tail_exponent = 0.0;   // 0 when g vanishes beyond the grid
    bool shape_constrained = false;
    bool ill_posed = false;
    std::string message;
};

DeconvolutionResult deconvolve(const DeconvolutionProblem& problem);

// max |[g*r](t) - conjugate(t)| over the given slopes
double necessary_condition_residual(const TransportCost& tau, const MassSpecificCost& z,
                                    const std::vector<double>& slopes);

enum class InverseRoute { Auto, Affine, Analytic, Deconvolve };

std::string to_string(InverseRoute r);
InverseRoute inverse_route_from_string(const std::string& s);

struct InverseOptions {
    UrbanVariant urban_variant = UrbanVariant::Step;
    int grid_points = 400;
    double t_min = 0.0;  // 0 picks a default slope window
    double t_max = 0.0;
    double regularization = 0.0;
    double residual_tol = 1e-6;
};

struct InverseResult {
    PhaseFieldCost c;
    InverseRoute route = InverseRoute::Auto;
    double residual = 0.0;
    bool ill_posed = false;
    std::string message;
};

InverseResult solve_inverse(const TransportCost& tau, InverseRoute route = InverseRoute::Auto,
                            const InverseOptions& options = {});

// Deconvolution problem built from tau's conjugate on a slope grid adapted to the form of tau.
DeconvolutionProblem make_deconvolution_problem(const TransportCost& tau, const InverseOptions& options = {});

}  // namespace phasecost
