#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "phasecost/phase_costs.hpp"

namespace phasecost {

// Arc on [y_start, y_end] (y measured outward from the centre): the value goes from phi_r at
// y_start down to phi_l at y_end. In the local coordinate t = y_end - y in [0, T]
//   phi(t) = (t/T) phi_r + ((T - t)/T) phi_l + (lambda/2) t (t - T).
struct QuadraticSegment {
    double y_start, y_end;
    double phi_l, phi_r;
    double lambda;

    double length() const { return y_end - y_start; }
    double eval(double y) const;
    double mass() const;       // int phi
    double dirichlet() const;  // int (1/2) phi'^2
};

struct PiecewiseQuadraticProfile {
    double plateau_half_width = 0.0;
    double plateau_height = 0.0;
    std::vector<QuadraticSegment> segments;  // outward, contiguous from the plateau edge
};

// Half-line samples y_0 = 0 < y_1 < ...; the profile is the even extension.
struct SampledProfile {
    std::vector<double> y, psi;
};

struct Profile {
    std::variant<PiecewiseQuadraticProfile, SampledProfile> form;
    double mass = 0.0;
    double energy = 0.0;
    bool exact_minimizer = false;  // false for epsilon-minimizers (tent family, Theta tails)

    double eval(double y) const;
    double max_value() const { return eval(0.0); }
    double half_support() const;
    // uniform samples on [0, half_support]
    SampledProfile sample(int points) const;
};

struct SegmentSolution {
    double phi_l, phi_r, w_seg;
    double T_hat;
    double lambda;
    double energy;  // int |phi'|^2 at the optimum
};

double segment_ell(double phi_l, double phi_r);
SegmentSolution optimal_segment(double phi_l, double phi_r, double w_seg);

// Step-z minimizer. Throws NoMinimizer in the linear region unless delta is given, in which case
// the tent with energy excess <= delta is returned (exact_minimizer = false).
Profile build_step_profile(const MassSpecificCost& z, double w, std::optional<double> delta = std::nullopt);

// Profile built on the tent/plateau index j of the closed form (for exposing the other
// minimizer at kinks). Throws NoMinimizer if the masses do not fit.
Profile build_step_profile_at_level(const MassSpecificCost& z, double w, std::size_t j);

// One-sided descending tail psi(t) = Theta^-1(T - t), t in [0, T]; energy is the tail's
// int (1/2) psi'^2 + c(psi).
struct TailProfile {
    SampledProfile samples;  // y = t from the top (psi = psi_hat at y = 0) down to 0
    double length;
    double energy;
};
TailProfile theta_profile(const PhaseFieldCost& c, double psi_hat, double delta);

struct ExistenceResult {
    bool exists;
    double tau;
    double linear_value;  // (tau^z)'(0) w
    double relative_gap;
};
ExistenceResult exists_minimizer(const MassSpecificCost& z, double w);

struct LagrangeResult {
    double lambda;
    double right_slope;  // tau'(w)
    double left_slope;   // tau^l(w)
    bool consistent;
};
LagrangeResult lagrange_slope(const Profile& profile, const MassSpecificCost& z, double w, double tol = 1e-9);

// discrete energy pieces for any profile, by fine sampling (test helper and oracle)
double profile_energy_sampled(const Profile& p, const PhaseFieldCost& c, int points = 20001);

// 2 int_0^psi_hat sqrt(2 c)
double modica_mortola_bound(const PhaseFieldCost& c, double psi_hat);
// 2 (psi_hat / 2)^3 / w
double energy_estimate_bound(double psi_hat, double w);

}  // namespace phasecost
