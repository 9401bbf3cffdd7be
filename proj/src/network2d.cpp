#include "phasecost/network2d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <queue>

namespace phasecost {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

// 2D real-to-real transform of one kind on an N x N row-major array
class R2R {
public:
    R2R(int N, fftw_r2r_kind kind) : N_(N), buf_(static_cast<std::size_t>(N) * N) {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan_ = fftw_plan_r2r_2d(N, N, buf_.data(), buf_.data(), kind, kind, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~R2R() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan_);
    }
    R2R(const R2R&) = delete;
    R2R& operator=(const R2R&) = delete;
    void operator()(std::vector<double>& a) const { fftw_execute_r2r(plan_, a.data(), a.data()); }

private:
    int N_;
    std::vector<double> buf_;
    fftw_plan plan_;
};

std::size_t node(int n, int i, int j) { return static_cast<std::size_t>(i) * (n + 1) + j; }
std::size_t cell(int n, int i, int j) { return static_cast<std::size_t>(i) * n + j; }

// eigenvalue of -Laplacian in one direction for mode k of a transform of period 2n
double lap1(int k, int n, double h) {
    const double s = std::sin(std::numbers::pi * k / (2.0 * n));
    return 4.0 * s * s / (h * h);
}

class Preconditioner {
public:
    Preconditioner(int n, double eps, double weight) : n_(n), dst_(n - 1, FFTW_RODFT00), inv_(static_cast<std::size_t>(n - 1) * (n - 1)) {
        const double h = 1.0 / n;
        const double norm = 1.0 / (4.0 * n * n);
        for (int k = 1; k < n; ++k)
            for (int l = 1; l < n; ++l) {
                const double lam = lap1(k, n, h) + lap1(l, n, h);
                inv_[static_cast<std::size_t>(k - 1) * (n - 1) + (l - 1)] =
                    norm / (h * h * (eps * eps * eps * lam * lam + weight * eps * lam));
            }
    }
    // d = -P^-1 g on interior nodes
    void apply(const std::vector<double>& g, std::vector<double>& d) const {
        const int m = n_ - 1;
        std::vector<double> a(static_cast<std::size_t>(m) * m);
        for (int i = 1; i < n_; ++i)
            for (int j = 1; j < n_; ++j) a[static_cast<std::size_t>(i - 1) * m + (j - 1)] = g[node(n_, i, j)];
        dst_(a);
        for (std::size_t k = 0; k < a.size(); ++k) a[k] *= inv_[k];
        dst_(a);
        d.assign(g.size(), 0.0);
        for (int i = 1; i < n_; ++i)
            for (int j = 1; j < n_; ++j) d[node(n_, i, j)] = -a[static_cast<std::size_t>(i - 1) * m + (j - 1)];
    }

private:
    int n_;
    R2R dst_;
    std::vector<double> inv_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

FaceField FaceField::zeros(int n) {
    if (n < 2) throw ValidationError("grid needs at least 2 cells per side");
    FaceField f;
    f.n = n;
    f.sx.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
    f.sy.assign(static_cast<std::size_t>(n) * (n + 1), 0.0);
    return f;
}

std::vector<double> mollify(const Measure2D& mu, int n) {
    const double h = 1.0 / n;
    const double rho = mu.rho > 0.0 ? mu.rho : 3.0 * h;
    if (rho < 2.0 * h * (1.0 - 1e-12)) throw ValidationError("mollification radius must be at least 2h");
    std::vector<double> f(static_cast<std::size_t>(n) * n, 0.0), g(f.size());
    for (const auto& p : mu.points) {
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) throw ValidationError("point mass outside the unit square");
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double dx = (i + 0.5) * h - p.x, dy = (j + 0.5) * h - p.y;
                g[cell(n, i, j)] = std::exp(-(dx * dx + dy * dy) / (2.0 * rho * rho));
                sum += g[cell(n, i, j)];
            }
        const double scale = p.w / (sum * h * h);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += scale * g[k];
    }
    return f;
}

std::vector<double> source_density(const Measure2D& mu0, const Measure2D& mu1, int n) {
    double net = 0.0, total = 0.0;
    for (const auto& p : mu0.points) {
        net += p.w;
        total += std::abs(p.w);
    }
    for (const auto& p : mu1.points) {
        net -= p.w;
        total += std::abs(p.w);
    }
    if (std::abs(net) > 1e-12 * std::max(1.0, total)) throw ValidationError("source and sink masses do not balance");
    auto f = mollify(mu0, n);
    const auto f1 = mollify(mu1, n);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] -= f1[k];
    return f;
}

std::vector<double> divergence(const FaceField& s) {
    const int n = s.n;
    const double h = s.h();
    std::vector<double> d(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d[cell(n, i, j)] = (s.x(i + 1, j) - s.x(i, j) + s.y(i, j + 1) - s.y(i, j)) / h;
    return d;
}

double divergence_residual(const FaceField& s, const std::vector<double>& f) {
    const auto d = divergence(s);
    const double h = s.h();
    double sum = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) sum += (d[k] - f[k]) * (d[k] - f[k]);
    return std::sqrt(sum) * h;
}

FaceField particular_solution(const std::vector<double>& f, int n) {
    if (f.size() != static_cast<std::size_t>(n) * n) throw ValidationError("density size does not match the grid");
    const double h = 1.0 / n;
    std::vector<double> v = f;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
    {
        R2R fwd(n, FFTW_REDFT10), inv(n, FFTW_REDFT01);
        fwd(v);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const double lam = lap1(k, n, h) + lap1(l, n, h);
                v[cell(n, k, l)] = (k == 0 && l == 0) ? 0.0 : -v[cell(n, k, l)] / lam;
            }
        inv(v);
        for (double& x : v) x /= 4.0 * n * n;
    }
    FaceField s = FaceField::zeros(n);
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < n; ++j) s.x(i, j) = (v[cell(n, i, j)] - v[cell(n, i - 1, j)]) / h;
    for (int i = 0; i < n; ++i)
        for (int j = 1; j < n; ++j) s.y(i, j) = (v[cell(n, i, j)] - v[cell(n, i, j - 1)]) / h;
    return s;
}

FaceField particular_solution(const Measure2D& mu0, const Measure2D& mu1, int n) {
    return particular_solution(source_density(mu0, mu1, n), n);
}

FaceField add_curl(const FaceField& s0, const std::vector<double>& u) {
    const int n = s0.n;
    const double h = s0.h();
    if (u.size() != static_cast<std::size_t>(n + 1) * (n + 1)) throw ValidationError("stream function size does not match the grid");
    FaceField s = s0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j) s.x(i, j) += (u[node(n, i, j + 1)] - u[node(n, i, j)]) / h;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) s.y(i, j) -= (u[node(n, i + 1, j)] - u[node(n, i, j)]) / h;
    return s;
}

namespace {

// Dirichlet part of the energy; accumulates eps^3 * differences into gx, gy when given
double dirichlet_sum(const FaceField& s, double eps, std::vector<double>* gx, std::vector<double>* gy) {
    const int n = s.n;
    const double e3 = eps * eps * eps;
    double sum = 0.0;
    auto pair = [&](double a, double b, double* ga, double* gb) {
        const double d = b - a;
        sum += d * d;
        if (ga) {
            *ga -= e3 * d;
            *gb += e3 * d;
        }
    };
    auto px = [&](int i, int j) { return gx ? &(*gx)[static_cast<std::size_t>(i) * n + j] : nullptr; };
    auto py = [&](int i, int j) { return gy ? &(*gy)[static_cast<std::size_t>(i) * (n + 1) + j] : nullptr; };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i < n) pair(s.x(i, j), s.x(i + 1, j), px(i, j), px(i + 1, j));
            if (j + 1 < n) pair(s.x(i, j), s.x(i, j + 1), px(i, j), px(i, j + 1));
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) {
            if (i + 1 < n) pair(s.y(i, j), s.y(i + 1, j), py(i, j), py(i + 1, j));
            if (j < n) pair(s.y(i, j), s.y(i, j + 1), py(i, j), py(i, j + 1));
        }
    return 0.5 * e3 * sum;
}

}  // namespace

EnergyParts energy_parts(const FaceField& s, double eps, const PhaseFieldCost& c) {
    if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
    const int n = s.n;
    const double h = s.h();
    EnergyParts e;
    e.dirichlet = dirichlet_sum(s, eps, nullptr, nullptr);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double vx = 0.5 * (s.x(i, j) + s.x(i + 1, j)), vy = 0.5 * (s.y(i, j) + s.y(i, j + 1));
            e.potential += h * h / eps * eval_c(c, eps * std::hypot(vx, vy));
        }
    return e;
}

double energy_2d(const FaceField& s, double eps, const PhaseFieldCost& c) { return energy_parts(s, eps, c).total(); }

std::vector<double> flux_magnitude(const FaceField& s) {
    const int n = s.n;
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m[cell(n, i, j)] = std::hypot(0.5 * (s.x(i, j) + s.x(i + 1, j)), 0.5 * (s.y(i, j) + s.y(i, j + 1)));
    return m;
}

FaceField strip_field(const Profile& psi, double eps, int n, double x0) {
    FaceField s = FaceField::zeros(n);
    const double h = s.h();
    for (int i = 0; i < n; ++i) {
        const double v = psi.eval(((i + 0.5) * h - x0) / eps) / eps;
        for (int j = 0; j <= n; ++j) s.y(i, j) = v;
    }
    return s;
}

MassSpecificCost smooth_steps(const MassSpecificCost& z, double rel_width) {
    const auto* st = z.as<StepFunction>();
    if (!st) return z;
    if (st->levels.empty()) return z;
    if (!std::isfinite(st->levels.front())) throw ValidationError("the 2D energy needs a finite z near 0");
    SampledMonotone sm;
    const auto lv = st->all_levels();
    for (std::size_t i = 1; i < st->thresholds.size(); ++i) {
        const double P = st->thresholds[i];
        const double prev = st->thresholds[i - 1];
        const double width = std::min(rel_width * (lv[i - 1] - lv[i]), 0.5 * (P - prev));
        sm.x.push_back(P - width);
        sm.v.push_back(lv[i - 1]);
        sm.x.push_back(P);
        sm.v.push_back(lv[i]);
    }
    sm.below = Extension::constant(lv.front());
    sm.above = Extension::constant(lv.back());
    return MassSpecificCost(std::move(sm));
}

std::vector<double> SimConfig::log_schedule(double eps_start, double eps_end, int stages) {
    if (!(eps_start > eps_end && eps_end > 0.0) || stages < 1) throw ValidationError("schedule needs eps_start > eps_end > 0");
    std::vector<double> s;
    for (int k = 0; k < stages; ++k)
        s.push_back(stages == 1 ? eps_end : eps_start * std::pow(eps_end / eps_start, static_cast<double>(k) / (stages - 1)));
    return s;
}

SmoothedEnergy::SmoothedEnergy(const FaceField& s0_, double eps_, const PhaseFieldCost& c_, double smoothing)
    : s0(s0_), eps(eps_), c{smooth_steps(c_.z, smoothing)}, eta(smoothing / eps_) {
    if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
}

double SmoothedEnergy::value(const std::vector<double>& u) const {
    const FaceField s = add_curl(s0, u);
    const int n = s.n;
    const double h = s.h();
    double e = dirichlet_sum(s, eps, nullptr, nullptr);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double vx = 0.5 * (s.x(i, j) + s.x(i + 1, j)), vy = 0.5 * (s.y(i, j) + s.y(i, j + 1));
            const double r = std::sqrt(vx * vx + vy * vy + eta * eta);
            e += h * h / eps * eval_c(c, eps * (r - eta));
        }
    return e;
}

double SmoothedEnergy::value_and_gradient(const std::vector<double>& u, std::vector<double>& grad) const {
    const FaceField s = add_curl(s0, u);
    const int n = s.n;
    const double h = s.h();
    std::vector<double> gx(s.sx.size(), 0.0), gy(s.sy.size(), 0.0);
    double e = dirichlet_sum(s, eps, &gx, &gy);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double vx = 0.5 * (s.x(i, j) + s.x(i + 1, j)), vy = 0.5 * (s.y(i, j) + s.y(i, j + 1));
            const double r = std::sqrt(vx * vx + vy * vy + eta * eta);
            const double phi = eps * (r - eta);
            e += h * h / eps * eval_c(c, phi);
            const double k = 0.5 * h * h * eval_c_slope(c, phi) / r;
            gx[static_cast<std::size_t>(i) * n + j] += k * vx;
            gx[static_cast<std::size_t>(i + 1) * n + j] += k * vx;
            gy[static_cast<std::size_t>(i) * (n + 1) + j] += k * vy;
            gy[static_cast<std::size_t>(i) * (n + 1) + j + 1] += k * vy;
        }
    grad.assign(u.size(), 0.0);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j < n; ++j) {
            const double g = gx[static_cast<std::size_t>(i) * n + j] / h;
            grad[node(n, i, j + 1)] += g;
            grad[node(n, i, j)] -= g;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double g = gy[static_cast<std::size_t>(i) * (n + 1) + j] / h;
            grad[node(n, i + 1, j)] -= g;
            grad[node(n, i, j)] += g;
        }
    for (int k = 0; k <= n; ++k) grad[node(n, 0, k)] = grad[node(n, n, k)] = grad[node(n, k, 0)] = grad[node(n, k, n)] = 0.0;
    return e;
}

SimResult minimize_2d(const Measure2D& mu0, const Measure2D& mu1, int n, const SimConfig& cfg) {
    if (cfg.epsilon_schedule.empty()) throw ValidationError("empty epsilon schedule");
    for (std::size_t k = 0; k < cfg.epsilon_schedule.size(); ++k) {
        if (!(cfg.epsilon_schedule[k] > 0.0)) throw ValidationError("epsilon must be positive");
        if (k > 0 && !(cfg.epsilon_schedule[k] < cfg.epsilon_schedule[k - 1]))
            throw ValidationError("epsilon schedule must be strictly decreasing");
    }
    if (cfg.iterations < 1) throw ValidationError("iterations must be positive");

    SimResult out;
    out.n = n;
    out.f = source_density(mu0, mu1, n);
    const FaceField s0 = particular_solution(out.f, n);
    out.u.assign(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);

    std::vector<double> schedule = cfg.epsilon_schedule;
    int inserts = 0, global_it = 0;
    std::vector<double> g, gn, d, un(out.u.size());
    std::vector<double> capped;
    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
        const double eps = schedule[stage];
        const SmoothedEnergy E(s0, eps, cfg.c, cfg.smoothing);
        const Preconditioner P(n, eps, cfg.precond_weight);
        double e = E.value_and_gradient(out.u, g);
        out.trace.push_back({global_it, eps, e, divergence_residual(add_curl(s0, out.u), out.f)});
        double alpha = 1.0;
        int accepted = 0, quiet = 0;
        bool failed = false, settled = false;
        for (int it = 0; it < cfg.iterations; ++it) {
            if (dot(g, g) == 0.0) {
                settled = true;
                break;
            }
            P.apply(g, d);
            double gd = dot(g, d);
            if (!(gd < 0.0)) {
                for (std::size_t k = 0; k < g.size(); ++k) d[k] = -g[k];
                gd = -dot(g, g);
            }
            double t = alpha, en = e;
            bool ok = false;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t k = 0; k < un.size(); ++k) un[k] = out.u[k] + t * d[k];
                en = E.value(un);
                if (en <= e + 1e-4 * t * gd) {
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) {
                failed = true;
                break;
            }
            en = E.value_and_gradient(un, gn);
            double sy = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) sy += t * d[k] * (gn[k] - g[k]);
            const double sPs = -t * t * gd;
            // Barzilai-Borwein length in the preconditioner metric, as a multiple of d = -P^-1 g
            alpha = sy > 0.0 ? std::clamp(sPs / sy, 1e-8, 1e8) : std::min(2.0 * t, 1e8);
            const double rel = (e - en) / std::max(std::abs(en), 1e-300);
            out.u.swap(un);
            g.swap(gn);
            e = en;
            ++accepted;
            ++global_it;
            out.trace.push_back({global_it, eps, e, divergence_residual(add_curl(s0, out.u), out.f)});
            quiet = rel < cfg.tolerance ? quiet + 1 : 0;
            if (quiet >= 10) {
                settled = true;
                break;
            }
        }
        if (!settled && !failed) capped.push_back(eps);
        if (failed && accepted == 0 && stage > 0) {
            if (inserts < 4) {
                // retry this level after an intermediate one
                schedule.insert(schedule.begin() + static_cast<std::ptrdiff_t>(stage),
                                std::sqrt(schedule[stage - 1] * schedule[stage]));
                ++inserts;
                --stage;
                continue;
            }
            out.flagged = true;
            out.message = "line search failed repeatedly at eps = " + std::to_string(eps);
        }
        out.energy = e;
    }
    const double eps_end = schedule.back();
    out.sigma = add_curl(s0, out.u);
    out.exact_energy = energy_2d(out.sigma, eps_end, cfg.c);
    for (const auto& r : out.trace) out.max_div_residual = std::max(out.max_div_residual, r.div_residual);
    if (out.message.empty() && !capped.empty()) {
        out.message = "iteration cap reached at eps =";
        for (double e : capped) out.message += " " + std::to_string(e);
    }
    if (out.message.empty()) out.message = "ok";
    return out;
}

SkeletonStats superlevel_connectivity(const std::vector<double>& m, int n, double level) {
    SkeletonStats st;
    const double mx = *std::max_element(m.begin(), m.end());
    if (!(mx > 0.0)) return st;
    const double thr = level * mx;
    std::vector<int> label(m.size(), -1);
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t k0 = cell(n, i, j);
            if (m[k0] < thr || label[k0] >= 0) continue;
            double mass = 0.0;
            std::queue<std::pair<int, int>> q;
            q.push({i, j});
            label[k0] = st.components;
            while (!q.empty()) {
                auto [a, b] = q.front();
                q.pop();
                mass += m[cell(n, a, b)];
                const int nb[4][2] = {{a + 1, b}, {a - 1, b}, {a, b + 1}, {a, b - 1}};
                for (auto& p : nb) {
                    if (p[0] < 0 || p[0] >= n || p[1] < 0 || p[1] >= n) continue;
                    const std::size_t k = cell(n, p[0], p[1]);
                    if (m[k] >= thr && label[k] < 0) {
                        label[k] = st.components;
                        q.push({p[0], p[1]});
                    }
                }
            }
            ++st.components;
            st.superlevel_mass += mass;
            best = std::max(best, mass);
        }
    st.largest_fraction = best / st.superlevel_mass;
    return st;
}

}  // namespace phasecost
