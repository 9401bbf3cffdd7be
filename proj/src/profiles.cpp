#include "phasecost/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phasecost/forward.hpp"
#include "phasecost/quadrature.hpp"

namespace phasecost {

// ---- segments --------------------------------------------------------------

double QuadraticSegment::eval(double y) const {
    const double T = length();
    const double t = y_end - y;
    if (T <= 0.0) return phi_l;
    return (t / T) * phi_r + ((T - t) / T) * phi_l + 0.5 * lambda * t * (t - T);
}

double QuadraticSegment::mass() const {
    const double T = length();
    return 0.5 * (phi_l + phi_r) * T - lambda * T * T * T / 12.0;
}

double QuadraticSegment::dirichlet() const {
    const double T = length();
    if (T <= 0.0) return 0.0;
    const double B = (phi_r - phi_l) / T - 0.5 * lambda * T;
    return 0.5 * (B * B * T + B * lambda * T * T + lambda * lambda * T * T * T / 3.0);
}

double segment_ell(double phi_l, double phi_r) {
    const double d = std::pow(phi_r, 1.5) - std::pow(phi_l, 1.5);
    return 2.0 * d * d / 9.0;
}

SegmentSolution optimal_segment(double phi_l, double phi_r, double w_seg) {
    if (!(phi_l >= 0.0) || !(phi_r > phi_l) || !std::isfinite(phi_r))
        throw ValidationError("segment: need 0 <= phi_l < phi_r < inf");
    if (!(w_seg > 0.0) || !std::isfinite(w_seg)) throw ValidationError("segment: mass must be positive and finite");
    const double d = std::pow(phi_r, 1.5) - std::pow(phi_l, 1.5);
    SegmentSolution s;
    s.phi_l = phi_l;
    s.phi_r = phi_r;
    s.w_seg = w_seg;
    s.T_hat = 3.0 * w_seg / (phi_l + std::sqrt(phi_l * phi_r) + phi_r);
    // curvature that makes the arc carry mass w_seg over length T_hat
    s.lambda = (2.0 / 9.0) * d * d / (w_seg * w_seg);
    s.energy = (4.0 / 9.0) * d * d / w_seg;
    return s;
}

// ---- Profile ---------------------------------------------------------------

double Profile::eval(double y) const {
    y = std::abs(y);
    if (const auto* pq = std::get_if<PiecewiseQuadraticProfile>(&form)) {
        if (y <= pq->plateau_half_width && pq->plateau_half_width > 0.0) return pq->plateau_height;
        for (const auto& s : pq->segments)
            if (y <= s.y_end) return s.eval(std::max(y, s.y_start));
        return 0.0;
    }
    const auto& sp = std::get<SampledProfile>(form);
    if (sp.y.empty() || y > sp.y.back()) return 0.0;
    auto it = std::upper_bound(sp.y.begin(), sp.y.end(), y);
    if (it == sp.y.end()) return sp.psi.back();
    const std::size_t k = static_cast<std::size_t>(it - sp.y.begin());
    if (k == 0) return sp.psi.front();
    const double f = (y - sp.y[k - 1]) / (sp.y[k] - sp.y[k - 1]);
    return sp.psi[k - 1] + f * (sp.psi[k] - sp.psi[k - 1]);
}

double Profile::half_support() const {
    if (const auto* pq = std::get_if<PiecewiseQuadraticProfile>(&form))
        return pq->segments.empty() ? pq->plateau_half_width : pq->segments.back().y_end;
    const auto& sp = std::get<SampledProfile>(form);
    return sp.y.empty() ? 0.0 : sp.y.back();
}

SampledProfile Profile::sample(int points) const {
    if (points < 2) throw ValidationError("profile sampling needs at least 2 points");
    SampledProfile out;
    const double Y = half_support();
    out.y.resize(static_cast<std::size_t>(points));
    out.psi.resize(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double y = Y * k / (points - 1);
        out.y[static_cast<std::size_t>(k)] = y;
        out.psi[static_cast<std::size_t>(k)] = eval(y);
    }
    return out;
}

// ---- step-z construction ---------------------------------------------------

namespace {

const StepFunction& step_of(const MassSpecificCost& z) {
    const auto* s = z.as<StepFunction>();
    if (!s) throw ValidationError("profile construction needs a step mass-specific cost");
    return *s;
}

Profile tent_profile(const StepFunction& s, double w, double delta) {
    if (!(delta > 0.0)) throw ValidationError("tent profile needs delta > 0");
    const double eta = std::cbrt(delta / (w * w));
    const double top = w * eta;
    const double half = 1.0 / eta;
    // split the ramp at the thresholds it crosses so each piece sits in one band
    std::vector<double> cuts{top};
    for (std::size_t i = s.thresholds.size(); i-- > 1;)
        if (s.thresholds[i] < top) cuts.push_back(s.thresholds[i]);
    cuts.push_back(0.0);
    PiecewiseQuadraticProfile pq;
    double energy = delta, mass = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double hi = cuts[k], lo = cuts[k + 1];
        QuadraticSegment seg{(top - hi) / (w * eta * eta), (top - lo) / (w * eta * eta), lo, hi, 0.0};
        pq.segments.push_back(seg);
        mass += seg.mass();
        energy += 2.0 * s(lo) * seg.mass();
    }
    pq.segments.back().y_end = half;
    Profile p;
    p.form = std::move(pq);
    p.mass = 2.0 * mass;
    p.energy = energy;
    p.exact_minimizer = false;
    return p;
}

Profile plateau_profile(const StepFunction& s, double w, std::size_t j) {
    const auto a = s.all_levels();
    const auto& phi = s.thresholds;
    if (j < 2 || j > a.size()) throw NoMinimizer(w, a.front(), "no plateau profile at level index " + std::to_string(j));
    const double aj = a[j - 1];
    const double height = phi[j - 1];
    std::vector<double> W(j, 0.0);
    double sumW = 0.0, S = 0.0;
    for (std::size_t i = 1; i < j; ++i) {
        W[i] = std::sqrt(segment_ell(phi[i - 1], phi[i]) / (a[i - 1] - aj));
        sumW += W[i];
        S += std::sqrt(a[i - 1] - aj) * (std::pow(phi[i], 1.5) - std::pow(phi[i - 1], 1.5));
    }
    double H = (0.5 * w - sumW) / height;
    if (H < -1e-12 * std::max(1.0, w / height))
        throw NoMinimizer(w, a.front(),
                          "arcs of level " + std::to_string(j) + " need mass " + std::to_string(2.0 * sumW) +
                              " > w = " + std::to_string(w));
    H = std::max(H, 0.0);
    PiecewiseQuadraticProfile pq;
    pq.plateau_half_width = H;
    pq.plateau_height = height;
    double y = H;
    double mass = H * height;
    for (std::size_t i = j - 1; i >= 1; --i) {
        const auto seg = optimal_segment(phi[i - 1], phi[i], W[i]);
        QuadraticSegment q{y, y + seg.T_hat, phi[i - 1], phi[i], seg.lambda};
        pq.segments.push_back(q);
        mass += q.mass();
        y += seg.T_hat;
    }
    Profile p;
    p.form = std::move(pq);
    p.mass = 2.0 * mass;
    p.energy = w * aj + (4.0 * std::numbers::sqrt2 / 3.0) * S;
    p.exact_minimizer = true;
    return p;
}

}  // namespace

Profile build_step_profile(const MassSpecificCost& z, double w, std::optional<double> delta) {
    const StepFunction& s = step_of(z);
    if (!(w > 0.0)) throw DomainError("profile needs positive mass");
    const auto fr = tau_closed_form(z, w);
    if (fr.optimal_index >= 2) {
        Profile p = plateau_profile(s, w, fr.optimal_index);
        p.energy = fr.tau_value;
        return p;
    }
    if (delta) return tent_profile(s, w, *delta);
    throw NoMinimizer(w, s.all_levels().front(),
                      "w = " + std::to_string(w) + " lies in the linear region tau(w) = " +
                          std::to_string(s.all_levels().front()) + " w; no minimizer exists");
}

Profile build_step_profile_at_level(const MassSpecificCost& z, double w, std::size_t j) {
    if (!(w > 0.0)) throw DomainError("profile needs positive mass");
    return plateau_profile(step_of(z), w, j);
}

// ---- Theta construction ----------------------------------------------------

TailProfile theta_profile(const PhaseFieldCost& c, double psi_hat, double delta) {
    if (!(psi_hat > 0.0) || !std::isfinite(psi_hat)) throw ValidationError("theta profile: psi_hat must be positive");
    if (!(delta >= 0.0)) throw ValidationError("theta profile: delta must be >= 0");
    const double dt = delta / psi_hat;
    auto speed = [&](double phi) { return std::sqrt(2.0 * eval_c(c, phi)) + dt; };
    if (dt == 0.0)
        for (int k = 1; k <= 400; ++k)
            if (!(eval_c(c, psi_hat * k / 400.0) > 0.0))
                throw ValidationError("theta profile: c vanishes on part of (0, psi_hat]; delta > 0 is required");

    // phi grid: quadratic clustering at 0 plus the kinks of z
    const int N = 256;
    std::vector<double> nodes;
    for (int k = 0; k <= N; ++k) {
        const double r = static_cast<double>(k) / N;
        nodes.push_back(psi_hat * r * r);
    }
    for (double x : c.z.kinks())
        if (x > 0.0 && x < psi_hat) nodes.push_back(x);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto inv_speed = [&](double phi) {
        const double s = speed(phi);
        return s > 0.0 ? 1.0 / s : kInf;
    };
    quad::Options opt;
    opt.rel_tol = 1e-12;
    std::vector<double> theta(nodes.size(), 0.0);
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        quad::Result r;
        if (k == 1) {
            r = quad::integrate_from_zero(inv_speed, nodes[1], opt);
            if (!std::isfinite(r.value))
                throw ValidationError("theta profile: Theta diverges at 0 (c vanishes too fast); use delta > 0");
        } else {
            r = quad::integrate_endpoints(inv_speed, nodes[k - 1], nodes[k], opt);
        }
        theta[k] = theta[k - 1] + r.value;
    }
    const double T = theta.back();

    TailProfile out;
    out.length = T;
    for (std::size_t k = nodes.size(); k-- > 0;) {
        out.samples.y.push_back(T - theta[k]);
        out.samples.psi.push_back(nodes[k]);
    }
    auto density = [&](double phi) {
        const double s = std::sqrt(2.0 * eval_c(c, phi));
        const double den = s + dt;
        return den > 0.0 ? (s * s + s * dt + 0.5 * dt * dt) / den : 0.0;
    };
    out.energy = quad::integrate_pieces(density, 0.0, psi_hat, c.z.kinks(), opt).value;
    return out;
}

// ---- existence and multipliers ---------------------------------------------

ExistenceResult exists_minimizer(const MassSpecificCost& z, double w) {
    if (!(w >= 0.0)) throw DomainError("negative mass");
    ExistenceResult r{};
    r.tau = z.is_step() && std::isfinite(z.limit_at_zero()) ? tau_closed_form(z, w).tau_value
                                                            : tau_modica_mortola(z, w).tau_value;
    const double s0 = z.limit_at_zero();
    if (w == 0.0) {
        r.linear_value = 0.0;
        r.relative_gap = 0.0;
        r.exists = false;
        return r;
    }
    r.linear_value = s0 * w;
    if (!std::isfinite(r.linear_value)) {
        r.relative_gap = 1.0;
        r.exists = true;
        return r;
    }
    r.relative_gap = (r.linear_value - r.tau) / std::max(std::abs(r.linear_value), 1e-300);
    r.exists = r.relative_gap > 1e-12;
    return r;
}

LagrangeResult lagrange_slope(const Profile& profile, const MassSpecificCost& z, double w, double tol) {
    LagrangeResult r{};
    r.lambda = z(profile.max_value());
    if (z.is_step() && std::isfinite(z.limit_at_zero())) {
        const auto sp = closed_form_slopes(z, w);
        r.right_slope = sp.right;
        r.left_slope = sp.left;
    } else {
        const double t = tau_modica_mortola(z, w).lagrange_slope;
        r.right_slope = t;
        r.left_slope = t;
    }
    r.consistent = r.lambda >= r.right_slope - tol * std::max(1.0, std::abs(r.right_slope)) &&
                   r.lambda <= r.left_slope + tol * std::max(1.0, std::abs(r.left_slope));
    return r;
}

double profile_energy_sampled(const Profile& p, const PhaseFieldCost& c, int points) {
    const auto s = p.sample(points);
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < s.y.size(); ++k) {
        const double h = s.y[k + 1] - s.y[k];
        const double d = s.psi[k + 1] - s.psi[k];
        e += 0.5 * d * d / h + 0.5 * h * (eval_c(c, s.psi[k]) + eval_c(c, s.psi[k + 1]));
    }
    return 2.0 * e;
}

double modica_mortola_bound(const PhaseFieldCost& c, double psi_hat) {
    if (!(psi_hat > 0.0)) return 0.0;
    auto f = [&](double phi) { return std::sqrt(2.0 * eval_c(c, phi)); };
    return 2.0 * quad::integrate_pieces(f, 0.0, psi_hat, c.z.kinks()).value;
}

double energy_estimate_bound(double psi_hat, double w) {
    if (!(w > 0.0)) return 0.0;
    const double h = 0.5 * psi_hat;
    return 2.0 * h * h * h / w;
}

}  // namespace phasecost
