#include "phasecost/forward.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "phasecost/quadrature.hpp"

namespace phasecost {

std::string to_string(Route r) {
    switch (r) {
        case Route::ClosedForm: return "closed_form";
        case Route::ModicaMortola: return "modica_mortola";
        case Route::DirectMinimization: return "direct";
    }
    return "unknown";
}

namespace {

constexpr double kTie = 1e-12;

const StepFunction& require_step(const MassSpecificCost& z) {
    const auto* s = z.as<StepFunction>();
    if (!s) throw ValidationError("closed form needs a step mass-specific cost");
    if (!std::isfinite(s->all_levels().front()))
        throw ValidationError("closed form needs a finite first level (c must be finite near 0)");
    return *s;
}

// F_j for all j (1-based in the result index + 1)
std::vector<double> closed_form_terms(const StepFunction& s, double w, bool early_exit, std::size_t* best_j,
                                      double* best_value) {
    const auto a = s.all_levels();
    const auto& phi = s.thresholds;
    const double k = 4.0 * std::numbers::sqrt2 / 3.0;
    std::vector<double> delta(a.size(), 0.0);  // delta[i-1] = phi_i^1.5 - phi_{i-1}^1.5
    for (std::size_t i = 1; i < phi.size(); ++i) delta[i - 1] = std::pow(phi[i], 1.5) - std::pow(phi[i - 1], 1.5);
    std::vector<double> F;
    double best = kInf;
    std::size_t bj = 0;
    const double a_last = a.back();
    for (std::size_t j = 1; j <= a.size(); ++j) {
        const double aj = a[j - 1];
        double S = 0.0;
        for (std::size_t i = 1; i < j; ++i) S += std::sqrt(a[i - 1] - aj) * delta[i - 1];
        S *= k;
        if (early_exit && bj > 0 && S + w * a_last > best * (1.0 + kTie)) break;
        const double Fj = w * aj + S;
        F.push_back(Fj);
        if (Fj <= best + kTie * std::abs(best) || bj == 0) {
            bj = j;
            best = std::min(best, Fj);
        }
    }
    if (best_j) *best_j = bj;
    if (best_value) *best_value = best;
    return F;
}

// values taken on either side of the jumps of z
std::vector<double> jump_values(const MassSpecificCost& z) {
    if (const auto* s = z.as<StepFunction>()) return s->all_levels();
    std::vector<double> out;
    if (const auto* s = z.as<SampledMonotone>()) {
        for (std::size_t i = 0; i + 1 < s->x.size(); ++i)
            if (s->x[i + 1] - s->x[i] <= 1e-12 * std::max(1.0, s->x[i + 1]) && s->v[i + 1] != s->v[i]) {
                out.push_back(s->v[i]);
                out.push_back(s->v[i + 1]);
            }
    }
    return out;
}

}  // namespace

ForwardResult tau_closed_form(const MassSpecificCost& z, double w) {
    if (!(w >= 0.0)) throw DomainError("negative mass");
    const StepFunction& s = require_step(z);
    std::size_t j = 0;
    double best = 0.0;
    closed_form_terms(s, w, true, &j, &best);
    ForwardResult r;
    r.w = w;
    r.tau_value = best;
    r.route = Route::ClosedForm;
    r.optimal_index = j;
    r.profile_max = j >= 2 ? s.thresholds[j - 1] : 0.0;
    r.lagrange_slope = s.all_levels()[j - 1];
    return r;
}

SlopePair closed_form_slopes(const MassSpecificCost& z, double w) {
    const StepFunction& s = require_step(z);
    double best = 0.0;
    auto F = closed_form_terms(s, w, false, nullptr, &best);
    const auto a = s.all_levels();
    double right = kInf, left = -kInf;
    for (std::size_t j = 0; j < F.size(); ++j) {
        if (F[j] <= best + kTie * std::abs(best) + 1e-300) {
            right = std::min(right, a[j]);
            left = std::max(left, a[j]);
        }
    }
    return {right, left};
}

SlopeLimits slope_limits(const MassSpecificCost& z) { return {z.limit_at_zero(), z.limit_at_infinity()}; }

double modica_mortola_conjugate(const MassSpecificCost& z, double t) {
    if (!(t >= 0.0)) throw DomainError("negative slope");
    const double top = generalized_inverse(z)(t);
    if (!std::isfinite(top)) return kInf;
    if (top == 0.0) return 0.0;
    auto f = [&](double phi) {
        const double d = z(phi) - t;
        return d > 0.0 ? std::sqrt(2.0 * d * phi) : 0.0;
    };
    quad::Options opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-15;
    auto res = quad::integrate_pieces(f, 0.0, top, z.kinks(), opt);
    if (!res.converged && res.error > 1e-8 * std::abs(res.value))
        throw NumericError("Modica-Mortola quadrature did not converge (t = " + std::to_string(t) +
                           ", error estimate " + std::to_string(res.error) + ")");
    return 2.0 * res.value;
}

ForwardResult tau_modica_mortola(const MassSpecificCost& z, double w, std::optional<double> t_guess) {
    if (!(w >= 0.0)) throw DomainError("negative mass");
    ForwardResult r;
    r.w = w;
    r.route = Route::ModicaMortola;
    const auto zinv = generalized_inverse(z);
    auto finish = [&](double t, double value) {
        r.tau_value = value;
        r.lagrange_slope = t;
        r.profile_max = zinv(t);
        return r;
    };
    if (t_guess) return finish(*t_guess, *t_guess * w + modica_mortola_conjugate(z, *t_guess));
    if (w == 0.0) return finish(z.limit_at_zero(), 0.0);

    const double t_lo = z.limit_at_infinity(), t_hi = z.limit_at_zero();
    double best_t = t_lo, best_v = kInf;
    auto f = [&](double t) {
        const double v = t * w + modica_mortola_conjugate(z, t);
        if (v < best_v || (v == best_v && t < best_t)) {
            best_v = v;
            best_t = t;
        }
        return v;
    };
    // t w + M(t) is only piecewise smooth: between jump values of z it can be concave, so the
    // jump values are candidates in their own right
    auto scan_jumps = [&] {
        for (double t : jump_values(z))
            if (t >= t_lo && t <= t_hi && std::isfinite(t)) f(t);
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    if (std::isfinite(t_hi)) {
        if (t_hi == t_lo) {
            f(t_lo);
            return finish(best_t, best_v);
        }
        scan_jumps();
        double a = t_lo, b = t_hi;
        f(a);
        f(b);
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b))) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        return finish(best_t, best_v);
    }
    scan_jumps();
    // unbounded slope range: search in u = log(t - t_lo)
    auto fu = [&](double u) { return f(t_lo + std::exp(u)); };
    double u0 = 0.0, step = 1.0;
    double f0 = fu(u0), fp = fu(u0 + step);
    if (fp > f0) step = -step, fp = fu(u0 + step);
    double ua = u0, ub = u0 + step, fa = f0, fb = fp;
    int guard = 0;
    while (fb < fa && guard++ < 200) {
        ua = ub;
        fa = fb;
        ub = ua + step;
        fb = fu(ub);
        step *= 1.5;
    }
    double a = std::min(ua - std::abs(step), ub), b = std::max(ua + std::abs(step), ub);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = fu(x1), f2 = fu(x2);
    while (b - a > 1e-15 * std::max(1.0, std::abs(a))) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fu(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fu(x2);
        }
    }
    return finish(best_t, best_v);
}

// ---- direct minimization ---------------------------------------------------

namespace {

constexpr double kSnap = 1e-6;

std::vector<double> snap_thresholds(const PhaseFieldCost& c) {
    return c.z.is_step() ? c.z.kinks() : std::vector<double>{};
}

double energy_on_grid(const PhaseFieldCost& c, const std::vector<double>& half, double h) {
    const std::size_t m = half.size();
    double dir = 0.0, pot = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double next = k + 1 < m ? half[k + 1] : 0.0;
        dir += (next - half[k]) * (next - half[k]);
        pot += (k == 0 ? 1.0 : 2.0) * (half[k] > 0.0 ? eval_c(c, half[k]) : 0.0);
    }
    return dir / h + h * pot;
}

}  // namespace

double discrete_energy(const PhaseFieldCost& c, const std::vector<double>& half, double h) {
    return energy_on_grid(c, half, h);
}

namespace {

class DirectSolver {
public:
    DirectSolver(const PhaseFieldCost& c, double w, int m, int max_iter)
        : c_(c), th_(snap_thresholds(c)), w_(w), m_(static_cast<std::size_t>(m)), max_iter_(max_iter) {}

    struct Inner {
        std::vector<double> p;
        double energy = kInf;
        int iterations = 0;
        bool converged = false;
    };

    double mass(const std::vector<double>& p, double h) const {
        double s = p[0];
        for (std::size_t k = 1; k < m_; ++k) s += 2.0 * p[k];
        return s * h;
    }

    // Rescale to mass w. For step z, nodes within kSnap of a threshold are put on it (the level
    // above the jump) and held there while the other nodes absorb the mass correction.
    void normalize(std::vector<double>& p, double h) const {
        double locked = 0.0, free = 0.0;
        std::vector<char> is_locked(m_, 0);
        for (std::size_t k = 0; k < m_; ++k) {
            const double wk = (k == 0 ? 1.0 : 2.0) * h;
            if (!th_.empty() && p[k] > 0.0) {
                auto it = std::lower_bound(th_.begin(), th_.end(), p[k]);
                double near = kInf;
                if (it != th_.end()) near = *it;
                if (it != th_.begin() && p[k] - *(it - 1) < near - p[k]) near = *(it - 1);
                if (std::isfinite(near) && std::abs(p[k] - near) <= kSnap * near) {
                    p[k] = near;
                    is_locked[k] = 1;
                    locked += wk * p[k];
                    continue;
                }
            }
            free += wk * p[k];
        }
        if (free > 0.0 && w_ - locked > 0.0) {
            const double f = (w_ - locked) / free;
            for (std::size_t k = 0; k < m_; ++k)
                if (!is_locked[k]) p[k] *= f;
        } else {
            const double ms = mass(p, h);
            if (ms > 0.0)
                for (double& x : p) x *= w_ / ms;
        }
    }

    Inner solve(double Y, std::vector<double> p) {
        const double h = Y / static_cast<double>(m_);
        for (double& x : p) x = std::max(x, 0.0);
        normalize(p, h);
        Inner out;
        double E = energy_on_grid(c_, p, h);
        std::vector<double> g(m_), d(m_), q(m_);
        int flat = 0;
        double window = E;
        for (int rearr = 0; rearr < 4; ++rearr) {
            int it = 0;
            for (; it < max_iter_; ++it) {
                gradient(p, h, g);
                if (!direction(p, g, h, d)) break;
                double gd = 0.0;
                for (std::size_t k = 0; k < m_; ++k) gd += g[k] * d[k];
                if (!(gd < 0.0)) break;
                double s = 1.0, En = kInf;
                bool ok = false;
                for (int bt = 0; bt < 40; ++bt, s *= 0.5) {
                    for (std::size_t k = 0; k < m_; ++k) q[k] = std::max(0.0, p[k] + s * d[k]);
                    normalize(q, h);
                    En = energy_on_grid(c_, q, h);
                    if (En <= E + 1e-4 * s * gd) {
                        ok = true;
                        break;
                    }
                }
                if (!ok) break;
                const double dec = E - En;
                p.swap(q);
                E = En;
                flat = dec <= 1e-11 * std::abs(E) ? flat + 1 : 0;
                if (flat >= 5) break;
                // slow creep across jumps of c: stop once 50 iterations gain < 1e-9 relative
                if (it % 50 == 0) {
                    if (it > 0 && window - E <= 1e-9 * std::abs(E)) break;
                    window = E;
                }
            }
            out.iterations += it;
            out.converged = it < max_iter_;
            // monotone rearrangement: the even decreasing rearrangement never raises the energy
            std::vector<double> sorted = p;
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            if (sorted == p) break;
            const double Es = energy_on_grid(c_, sorted, h);
            if (Es > E) break;
            p.swap(sorted);
            E = Es;
        }
        out.p = std::move(p);
        out.energy = E;
        return out;
    }

private:
    void gradient(const std::vector<double>& p, double h, std::vector<double>& g) const {
        double pmax = 0.0;
        for (double x : p) pmax = std::max(pmax, x);
        const double floor_phi = std::max(1e-12 * pmax, 1e-300);
        const double secant = eval_c(c_, floor_phi) / floor_phi;
        for (std::size_t k = 0; k < m_; ++k) {
            const double prev = k > 0 ? p[k - 1] : 0.0;
            const double next = k + 1 < m_ ? p[k + 1] : 0.0;
            double gd;
            if (k == 0)
                gd = -(2.0 / h) * (next - p[0]);
            else
                gd = (2.0 / h) * (2.0 * p[k] - prev - next);
            const double cs = p[k] > 0.0 ? eval_c_slope(c_, p[k]) : secant;
            g[k] = gd + (k == 0 ? 1.0 : 2.0) * h * cs;
        }
    }

    // tridiagonal solve on the free index set (couplings only between adjacent indices)
    void solve_free(const std::vector<std::size_t>& F, const std::vector<double>& rhs, double h,
                    std::vector<double>& x) const {
        const std::size_t n = F.size();
        std::vector<double> diag(n), off(n, 0.0), cp(n), dp(n);
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = (F[i] == 0 ? 2.0 : 4.0) / h;
            if (i + 1 < n && F[i + 1] == F[i] + 1) off[i] = -2.0 / h;
        }
        cp[0] = off[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double den = diag[i] - off[i - 1] * cp[i - 1];
            cp[i] = off[i] / den;
            dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / den;
        }
        x.assign(n, 0.0);
        x[n - 1] = dp[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    }

    bool direction(const std::vector<double>& p, const std::vector<double>& g, double h, std::vector<double>& d) const {
        std::vector<std::size_t> F(m_);
        for (std::size_t k = 0; k < m_; ++k) F[k] = k;
        std::vector<double> gF, mu, x1, x2;
        for (int pass = 0; pass < 50; ++pass) {
            if (F.empty()) return false;
            gF.resize(F.size());
            mu.resize(F.size());
            for (std::size_t i = 0; i < F.size(); ++i) {
                gF[i] = g[F[i]];
                mu[i] = (F[i] == 0 ? 1.0 : 2.0) * h;
            }
            solve_free(F, gF, h, x1);
            solve_free(F, mu, h, x2);
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < F.size(); ++i) {
                a += mu[i] * x1[i];
                b += mu[i] * x2[i];
            }
            const double beta = a / b;
            std::fill(d.begin(), d.end(), 0.0);
            std::vector<std::size_t> keep;
            bool dropped = false;
            for (std::size_t i = 0; i < F.size(); ++i) {
                const double di = -x1[i] + beta * x2[i];
                if (p[F[i]] <= 0.0 && di < 0.0) {
                    dropped = true;
                    continue;
                }
                keep.push_back(F[i]);
                d[F[i]] = di;
            }
            if (!dropped) return true;
            F.swap(keep);
        }
        return true;
    }

    const PhaseFieldCost& c_;
    std::vector<double> th_;
    double w_;
    std::size_t m_;
    int max_iter_;
};

}  // namespace

DirectResult tau_direct_full(const PhaseFieldCost& c, double w, const DirectOptions& opt) {
    if (!(w >= 0.0)) throw DomainError("negative mass");
    DirectResult res;
    res.forward.w = w;
    res.forward.route = Route::DirectMinimization;
    if (w == 0.0) {
        res.profile = {{0.0}, {0.0}};
        res.converged = true;
        return res;
    }
    if (opt.points < 11) throw ValidationError("direct minimization needs at least 11 grid points");
    const int m = (opt.points - 1) / 2;

    // Step z: the exact profile is known, so the grid covers the fixed domain [0, L] with
    // L = 3 x its support and descent only removes discretization error. Otherwise the support
    // Y of a shape on [0, Y] is searched in log Y.
    std::vector<double> shape(static_cast<std::size_t>(m));
    DirectSolver solver(c, w, m, opt.max_iterations);
    struct Eval {
        double Y;
        DirectSolver::Inner inner;
    };
    Eval best{0.0, {}};
    auto run = [&](double Y) {
        const auto& start = best.inner.p.empty() ? shape : best.inner.p;
        auto inner = solver.solve(Y, start);
        if (inner.energy < best.inner.energy) best = {Y, inner};
        return inner.energy;
    };

    if (c.z.is_step() && std::isfinite(c.z.limit_at_zero())) {
        const double tau_cf = tau_closed_form(c.z, w).tau_value;
        const Profile prof = build_step_profile(c.z, w, 1e-4 * tau_cf);
        const double L = opt.half_width > 0.0 ? opt.half_width : 3.0 * prof.half_support();
        for (int k = 0; k < m; ++k) shape[static_cast<std::size_t>(k)] = prof.eval(L * k / m);
        run(L);
    } else {
        double psi_hat = 0.0;
        try {
            psi_hat = tau_modica_mortola(c.z, w).profile_max;
        } catch (const std::exception&) {
            psi_hat = 0.0;
        }
        // no height scale available: use a unit-height guess
        if (!(psi_hat > 0.0) || !std::isfinite(psi_hat)) psi_hat = std::min(1.0, w);
        const double L = opt.half_width > 0.0 ? opt.half_width : 20.0 * w / psi_hat;
        const double Y0 = std::min(w / psi_hat, L);
        for (int k = 0; k < m; ++k) shape[static_cast<std::size_t>(k)] = 1.0 - static_cast<double>(k) / m;

        // bracket in log Y, then golden section
        const double r = 1.3;
        const double logL = std::log(L);
        double u = std::log(Y0);
        double fu = run(std::exp(u));
        double up = std::min(u + std::log(r), logL);
        double fup = up > u ? run(std::exp(up)) : kInf;
        double dir = fup < fu ? 1.0 : -1.0;
        double ua = u, ub = u, fb = fu;
        if (dir > 0) {
            ub = up;
            fb = fup;
        }
        double step = std::log(r);
        for (int guard = 0; guard < 60; ++guard) {
            double un = ub + dir * step;
            if (dir > 0 && un > logL) un = logL;
            if (un == ub) break;
            const double fn = run(std::exp(un));
            if (fn >= fb) {
                ua = un;
                break;
            }
            ua = ub;
            ub = un;
            fb = fn;
            step *= 1.4;
        }
        double a = std::min(ua, ub), b = std::max(ua, ub);
        // widen so the current best lies strictly inside
        a = std::min(a, std::log(best.Y) - 0.5 * step);
        b = std::min(std::max(b, std::log(best.Y) + 0.5 * step), logL);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = run(std::exp(x1)), f2 = run(std::exp(x2));
        while (b - a > 2e-4) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = run(std::exp(x1));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = run(std::exp(x2));
            }
        }
    }

    // seeded perturbation restarts at the best support
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int rs = 0; rs < opt.restarts; ++rs) {
        std::vector<double> p = best.inner.p;
        for (double& x : p) x *= 1.0 + noise(rng);
        auto inner = solver.solve(best.Y, p);
        if (inner.energy < best.inner.energy) best.inner = inner;
    }

    const double h = best.Y / m;
    res.forward.tau_value = best.inner.energy;
    res.forward.profile_max = best.inner.p[0];
    res.forward.lagrange_slope = c.z(best.inner.p[0]);
    res.forward.certified = best.inner.converged;
    res.support_half_width = best.Y;
    res.iterations = best.inner.iterations;
    res.converged = best.inner.converged;
    res.profile.y.resize(static_cast<std::size_t>(m) + 1);
    res.profile.psi.resize(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) {
        res.profile.y[static_cast<std::size_t>(k)] = k * h;
        res.profile.psi[static_cast<std::size_t>(k)] = k < m ? best.inner.p[static_cast<std::size_t>(k)] : 0.0;
    }
    return res;
}

}  // namespace phasecost
