#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "phasecost/phase_costs.hpp"
#include "phasecost/profiles.hpp"

namespace phasecost {

enum class Route { ClosedForm, ModicaMortola, DirectMinimization };
std::string to_string(Route r);

struct ForwardResult {
    double w = 0.0;
    double tau_value = 0.0;
    Route route = Route::ClosedForm;
    double profile_max = 0.0;
    double lagrange_slope = 0.0;
    bool certified = true;
    std::size_t optimal_index = 0;  // closed form: 1-based j of the minimizing term
};

ForwardResult tau_closed_form(const MassSpecificCost& z, double w);

// tau^z'(w) (right) and tau^z_l(w) (left) for a step z, from the set of minimizing terms.
struct SlopePair {
    double right, left;
};
SlopePair closed_form_slopes(const MassSpecificCost& z, double w);

// M(t) = 2 int_0^{z^-1(t)} sqrt(2 max(0, z - t) phi) dphi, i.e. [g*r](t).
double modica_mortola_conjugate(const MassSpecificCost& z, double t);

ForwardResult tau_modica_mortola(const MassSpecificCost& z, double w, std::optional<double> t_guess = std::nullopt);

struct SlopeLimits {
    double at_zero, at_infinity;
};
SlopeLimits slope_limits(const MassSpecificCost& z);

struct DirectOptions {
    double half_width = 0.0;  // 0: choose automatically
    int points = 2001;        // grid points across the full support [-Y, Y]
    int max_iterations = 4000;
    int restarts = 1;
    std::uint64_t seed = 0;
};

struct DirectResult {
    ForwardResult forward;
    SampledProfile profile;  // half-line samples, psi(0) = max
    double support_half_width = 0.0;
    int iterations = 0;
    bool converged = false;
};

DirectResult tau_direct_full(const PhaseFieldCost& c, double w, const DirectOptions& opt = {});
inline ForwardResult tau_direct(const PhaseFieldCost& c, double w, const DirectOptions& opt = {}) {
    return tau_direct_full(c, w, opt).forward;
}

// Discrete functional on a half grid y_k = k h with psi_m = 0 (even extension).
double discrete_energy(const PhaseFieldCost& c, const std::vector<double>& half, double h);

}  // namespace phasecost
