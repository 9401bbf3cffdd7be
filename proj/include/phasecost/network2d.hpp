#pragma once

#include <string>
#include <vector>

#include "phasecost/phase_costs.hpp"
#include "phasecost/profiles.hpp"

namespace phasecost {

struct PointMass {
    double x, y, w;
};

struct Measure2D {
    std::vector<PointMass> points;
    double rho = 0.0;  // Gaussian mollification radius; 0 means 3h
};

// Staggered flux on the unit square with n x n cells of size h = 1/n.
//   sx(i, j): normal flux through the vertical face x = i h, y in cell row j  (i = 0..n, j = 0..n-1)
//   sy(i, j): normal flux through the horizontal face y = j h, x in cell column i  (i = 0..n-1, j = 0..n)
struct FaceField {
    int n = 0;
    std::vector<double> sx, sy;

    static FaceField zeros(int n);
    double h() const { return 1.0 / n; }
    double& x(int i, int j) { return sx[static_cast<std::size_t>(i) * n + j]; }
    double x(int i, int j) const { return sx[static_cast<std::size_t>(i) * n + j]; }
    double& y(int i, int j) { return sy[static_cast<std::size_t>(i) * (n + 1) + j]; }
    double y(int i, int j) const { return sy[static_cast<std::size_t>(i) * (n + 1) + j]; }
};

// Cell-centred density (index i * n + j, cell centre ((i+1/2)h, (j+1/2)h)); each point's Gaussian
// is renormalized on the grid so that sum h^2 f = w exactly.
std::vector<double> mollify(const Measure2D& mu, int n);
// mollified mu0 - mu1
std::vector<double> source_density(const Measure2D& mu0, const Measure2D& mu1, int n);

std::vector<double> divergence(const FaceField& s);
// sqrt(sum h^2 (div s - f)^2)
double divergence_residual(const FaceField& s, const std::vector<double>& f);

// grad v with v solving the zero-Neumann Poisson problem div grad v = f (cosine transform)
FaceField particular_solution(const std::vector<double>& f, int n);
FaceField particular_solution(const Measure2D& mu0, const Measure2D& mu1, int n);

// s0 + curl u, u on the (n+1)^2 nodes (index i * (n+1) + j), zero on the boundary
FaceField add_curl(const FaceField& s0, const std::vector<double>& u);

struct EnergyParts {
    double dirichlet = 0.0;  // int (eps^3/2) |grad s|^2
    double potential = 0.0;  // int (1/eps) c(eps |s|)
    double total() const { return dirichlet + potential; }
};

EnergyParts energy_parts(const FaceField& s, double eps, const PhaseFieldCost& c);
double energy_2d(const FaceField& s, double eps, const PhaseFieldCost& c);

// |s| at cell centres from face averages
std::vector<double> flux_magnitude(const FaceField& s);

// Vertical strip: sy = psi((x - x0)/eps)/eps on every horizontal face, sx = 0.
FaceField strip_field(const Profile& psi, double eps, int n, double x0 = 0.5);

struct SimConfig {
    std::vector<double> epsilon_schedule;  // strictly decreasing
    PhaseFieldCost c;
    int iterations = 2000;      // per stage
    double tolerance = 1e-9;    // relative energy decrease that ends a stage
    double smoothing = 1e-3;    // width of |s| and of step transitions, in density units
    double precond_weight = 1.0;

    // 5 logarithmic stages from eps_start down to eps_end
    static std::vector<double> log_schedule(double eps_start, double eps_end, int stages = 5);
};

struct TraceRow {
    int iteration;
    double epsilon, energy, div_residual;
};

struct SimResult {
    int n = 0;
    std::vector<double> u;
    FaceField sigma;
    std::vector<double> f;
    std::vector<TraceRow> trace;
    double energy = 0.0;          // smoothed energy at the final eps (the descended functional)
    double exact_energy = 0.0;    // energy_2d with the unsmoothed c
    double max_div_residual = 0.0;
    bool flagged = false;
    std::string message;
};

SimResult minimize_2d(const Measure2D& mu0, const Measure2D& mu1, int n, const SimConfig& config);

// Smoothed descent energy and its gradient with respect to the interior node values of u.
struct SmoothedEnergy {
    SmoothedEnergy(const FaceField& s0, double eps, const PhaseFieldCost& c, double smoothing);
    double value(const std::vector<double>& u) const;
    double value_and_gradient(const std::vector<double>& u, std::vector<double>& grad) const;

    FaceField s0;
    double eps;
    PhaseFieldCost c;  // step transitions already smoothed
    double eta;        // |s| smoothing in flux units
};

struct SkeletonStats {
    int components = 0;
    double largest_fraction = 0.0;  // largest component's share of the superlevel mass
    double superlevel_mass = 0.0;
};

// 4-connected components of {m >= level * max m}
SkeletonStats superlevel_connectivity(const std::vector<double>& magnitude, int n, double level = 0.2);

// Step transitions replaced by linear ramps of width rel_width * (level gap) below each threshold.
MassSpecificCost smooth_steps(const MassSpecificCost& z, double rel_width);

}  // namespace phasecost
