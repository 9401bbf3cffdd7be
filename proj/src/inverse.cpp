#include "phasecost/inverse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "phasecost/nnls.hpp"
#include "phasecost/quadrature.hpp"

namespace phasecost {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

TransportCost to_piecewise_affine(const TransportCost& tau) {
    if (tau.as<PiecewiseAffineCost>()) return tau;
    if (const auto* u = tau.as<UrbanPlanningCost>()) return TransportCost::piecewise_affine({0.0, u->kink()}, {u->a, u->b});
    if (const auto* s = tau.as<SampledCost>()) {
        std::vector<double> bp{0.0}, sl;
        for (std::size_t i = 0; i + 1 < s->w.size(); ++i) {
            const double slope = (s->tau[i + 1] - s->tau[i]) / (s->w[i + 1] - s->w[i]);
            if (!sl.empty() && std::abs(slope - sl.back()) <= 1e-12 * std::max(1.0, std::abs(slope))) continue;
            if (!sl.empty()) bp.push_back(s->w[i]);
            sl.push_back(slope);
        }
        return TransportCost::piecewise_affine(bp, sl);
    }
    throw UnsupportedForm("the affine route needs a piecewise-affine, urban planning or sampled cost");
}

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// indices of the nodes used for a power-law fit at one end of the grid: one decade, at least 20% of nodes
std::vector<std::size_t> fit_window(const std::vector<double>& t, bool upper) {
    const std::size_t n = t.size();
    const std::size_t min_count = std::max<std::size_t>(2, n / 5);
    std::vector<std::size_t> idx;
    if (upper) {
        for (std::size_t k = n; k-- > 0;)
            if (t[k] >= t.back() / 10.0 || n - k <= min_count) idx.push_back(k);
    } else {
        for (std::size_t k = 0; k < n; ++k)
            if (t[k] <= t.front() * 10.0 || k < min_count) idx.push_back(k);
    }
    return idx;
}

}  // namespace

MassSpecificCost invert_piecewise_affine(const TransportCost& tau) {
    const auto* pa = tau.as<PiecewiseAffineCost>();
    if (!pa) throw UnsupportedForm("invert_piecewise_affine needs a piecewise-affine cost");
    const auto& w = pa->breakpoints;
    const auto& a = pa->slopes;
    for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] < a[i - 1])) throw ValidationError("invert_piecewise_affine: slopes must be strictly decreasing");
    if (a.back() < 0.0) throw ValidationError("invert_piecewise_affine: slopes must be nonnegative");
    const std::size_t N = w.size() - 1;  // number of kinks
    std::vector<double> delta(N + 1, 0.0), phi(N + 1, 0.0);
    double p32 = 0.0;
    for (std::size_t j = 1; j <= N; ++j) {
        // a_j = a[j-1], a_{j+1} = a[j]
        double paren = 3.0 * w[j] / (4.0 * kSqrt2);
        for (std::size_t i = 1; i < j; ++i)
            paren -= delta[i] / (std::sqrt(a[i - 1] - a[j]) + std::sqrt(a[i - 1] - a[j - 1]));
        const double bound = 3.0 / (4.0 * kSqrt2) * (w[j] - w[j - 1]);
        if (!(paren > 0.0) || paren < bound * (1.0 - 1e-9))
            throw InconsistencyError("invert_piecewise_affine: recursion factor " + std::to_string(paren) +
                                     " below its lower bound " + std::to_string(bound));
        delta[j] = paren * std::sqrt(a[j - 1] - a[j]);
        p32 += delta[j];
        phi[j] = std::pow(p32, 2.0 / 3.0);
    }
    StepFunction s;
    s.thresholds = phi;
    s.levels.assign(a.begin(), a.end() - 1);
    s.final_level = a.back();
    return MassSpecificCost(std::move(s));
}

double power_g_exponent(double alpha) { return 0.5 + alpha / (1.0 - alpha); }

double power_g_coefficient(double alpha) {
    const double r = alpha / (1.0 - alpha);
    return std::pow(alpha, 1.0 / (1.0 - alpha)) / std::sqrt(2.0 * std::numbers::pi) * 3.0 * std::tgamma(0.5 + r) /
           (2.0 * std::tgamma(1.0 + r));
}

GTransform power_g(double alpha) {
    const double K = power_g_coefficient(alpha), beta = power_g_exponent(alpha);
    AnalyticMonotone m;
    m.f = [K, beta](double s) { return s == 0.0 ? kInf : K * std::pow(s, -beta); };
    m.at_zero = kInf;
    m.at_infinity = 0.0;
    return GTransform(std::move(m));
}

GTransform urban_g(double a, double b, double d) {
    if (!(a > b && b >= 0.0 && d > 0.0)) throw ValidationError("urban planning g needs a > b >= 0, d > 0");
    const double C = 3.0 / (kSqrt2 * std::numbers::pi) * d / (a - b);
    AnalyticMonotone m;
    m.f = [a, b, C](double s) {
        if (s < b) return kInf;
        if (s >= a) return 0.0;
        return C * std::sqrt(a - s);
    };
    m.at_zero = b > 0.0 ? kInf : C * std::sqrt(a);
    m.at_infinity = 0.0;
    m.breaks = {b, a};
    return GTransform(std::move(m));
}

PhaseFieldCost analytic_inverse(const TransportCost& tau, UrbanVariant variant) {
    if (const auto* p = tau.as<PowerCost>()) {
        const double alpha = p->alpha;
        const double K = power_g_coefficient(alpha);
        const double coef = std::pow(K, 2.0 * (1.0 - alpha) / (1.0 + alpha));
        const double e = 2.0 * (2.0 * alpha - 1.0) / (1.0 + alpha);
        return {power_law_z(coef, e - 1.0)};
    }
    if (const auto* u = tau.as<UrbanPlanningCost>()) {
        if (variant == UrbanVariant::Smooth) return {urban_smooth_z(u->a, u->b, u->d)};
        return {urban_step_z(u->a, u->b, u->d)};
    }
    throw UnsupportedForm("analytic_inverse covers power and urban planning costs; use the affine or deconvolution route");
}

double abel_kernel(double s) { return s < 0.0 ? 2.0 * kSqrt2 / (3.0 * std::sqrt(-s)) : 0.0; }

double abel_forward(const GTransform& g, double t) {
    if (!(t >= 0.0)) throw DomainError("abel_forward evaluated at negative slope");
    if (const auto* s = g.as<StepFunction>()) {
        if (s->final_level > 0.0) throw NumericError("abel_forward: g does not decay, the integral diverges");
        double sum = 0.0;
        for (std::size_t i = 0; i < s->levels.size(); ++i) {
            const double hi = s->thresholds[i + 1];
            if (hi <= t) continue;
            const double len = std::sqrt(2.0 * (hi - t)) - std::sqrt(2.0 * std::max(0.0, s->thresholds[i] - t));
            if (s->levels[i] == kInf) return kInf;
            sum += s->levels[i] * len;
        }
        return 4.0 / 3.0 * sum;
    }
    if (g.limit_at_infinity() > 0.0) throw NumericError("abel_forward: g does not decay, the integral diverges");
    if (g(t) == kInf) return kInf;
    auto f = [&](double q) { return g(t + 0.5 * q * q); };
    std::vector<double> cuts;
    double q_last = 0.0;
    for (double k : g.kinks())
        if (k > t) {
            cuts.push_back(std::sqrt(2.0 * (k - t)));
            q_last = std::max(q_last, cuts.back());
        }
    quad::Result r;
    const auto* sm = g.as<SampledMonotone>();
    if (sm && sm->above == Extension::constant(0.0)) {
        if (q_last == 0.0) return 0.0;
        r = quad::integrate_pieces(f, 0.0, q_last, cuts);
    } else {
        const double scale = std::max({std::sqrt(2.0 * t), q_last, 1e-6});
        r = quad::integrate_to_infinity(f, 0.0, scale, {}, cuts);
    }
    if (!r.converged && r.error > 1e-8 * std::abs(r.value))
        throw NumericError("abel_forward: quadrature did not converge");
    return 4.0 / 3.0 * r.value;
}

DeconvolutionResult deconvolve(const DeconvolutionProblem& pb) {
    const auto& t = pb.t;
    const std::size_t n = t.size();
    if (n < 3 || pb.rhs.size() != n) throw ValidationError("deconvolve: need at least 3 slopes with matching values");
    if (!(t.front() >= 0.0)) throw ValidationError("deconvolve: slopes must be nonnegative");
    for (std::size_t k = 1; k < n; ++k)
        if (!(t[k] > t[k - 1])) throw ValidationError("deconvolve: slope grid must be strictly increasing");
    double rmax = 0.0;
    for (double r : pb.rhs) {
        if (!std::isfinite(r) || r < 0.0) throw ValidationError("deconvolve: conjugate values must be finite and >= 0");
        rmax = std::max(rmax, r);
    }
    if (!(pb.regularization >= 0.0)) throw ValidationError("deconvolve: regularization must be >= 0");
    std::vector<bool> con = pb.constrained.empty() ? std::vector<bool>(n, true) : pb.constrained;
    if (con.size() != n) throw ValidationError("deconvolve: constraint mask size mismatch");
    con.front() = con.back() = true;

    DeconvolutionResult out;
    out.t = t;
    if (rmax == 0.0) {
        out.g_values.assign(n, 0.0);
        out.g = GTransform(SampledMonotone{t, out.g_values, Extension::constant(pb.infinite_below ? kInf : 0.0),
                                           Extension::constant(0.0)});
        out.message = "zero conjugate";
        return out;
    }

    const bool zero_tail = pb.rhs.back() <= 1e-13 * rmax;
    double p = 0.0;
    if (!zero_tail) {
        std::vector<double> xs, ys;
        for (std::size_t k : fit_window(t, true)) {
            xs.push_back(t[k]);
            ys.push_back(pb.rhs[k]);
        }
        if (xs.front() <= 0.0 || *std::min_element(ys.begin(), ys.end()) <= 0.0)
            throw NumericError("deconvolve: cannot fit a power-law tail");
        p = -loglog_slope(xs, ys) + 0.5;
        if (!(p > 0.5)) throw NumericError("deconvolve: conjugate tail decays too slowly for an integrable g");
    }
    out.tail_exponent = p;

    // unknowns: g at constrained nodes (the last one is pinned to 0 with a vanishing tail)
    std::vector<std::size_t> J;
    for (std::size_t k = 0; k < n; ++k)
        if (con[k] && !(zero_tail && k + 1 == n)) J.push_back(k);
    const auto m = static_cast<Eigen::Index>(J.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
    {
        std::size_t c = 0;
        for (std::size_t k = 0; k < n; ++k) {
            while (c + 1 < J.size() && J[c + 1] <= k) ++c;
            if (J[c] == k) {
                P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = 1.0;
            } else if (c + 1 < J.size()) {
                const double f = (t[k] - t[J[c]]) / (t[J[c + 1]] - t[J[c]]);
                P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = 1.0 - f;
                P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c + 1)) = f;
            } else {
                // between the last unknown and the pinned zero at the end
                const double f = (t[k] - t[J[c]]) / (t.back() - t[J[c]]);
                P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = 1.0 - f;
            }
        }
    }

    // rows: constrained nodes except the end node of a vanishing tail (0 = 0 there)
    std::vector<std::size_t> rows = J;
    const double kappa = 2.0 * kSqrt2 / 3.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = rows[r];
        const auto R = static_cast<Eigen::Index>(r);
        b(R) = pb.rhs[k];
        for (std::size_t i = k; i + 1 < n; ++i) {
            const double u0 = t[i] - t[k], u1 = t[i + 1] - t[k], h = t[i + 1] - t[i];
            const double su0 = std::sqrt(u0), su1 = std::sqrt(u1), D = su0 + su1;
            const double M0 = 2.0 * h / D;                                  // int u^-1/2
            const double M1h = 2.0 * h / (3.0 * D * D) * (su1 + 2.0 * su0);  // int (u-u0)/h u^-1/2
            A(R, static_cast<Eigen::Index>(i)) += kappa * (M0 - M1h);
            A(R, static_cast<Eigen::Index>(i + 1)) += kappa * M1h;
        }
        if (!zero_tail) {
            const double tM = t.back(), tk = t[k];
            auto f = [=](double q) { return std::pow(tM / (tk + 0.5 * q * q), p); };
            const double q0 = std::sqrt(2.0 * (tM - tk));
            const auto res = quad::integrate_to_infinity(f, q0, std::max(std::sqrt(2.0 * tM), 1e-6));
            A(R, static_cast<Eigen::Index>(n - 1)) += 4.0 / 3.0 * res.value;
        }
    }
    Eigen::MatrixXd AP = A * P;
    if (pb.regularization > 0.0) {
        Eigen::MatrixXd aug(AP.rows() + m, m);
        aug << AP, std::sqrt(pb.regularization) * Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd baug(b.size() + m);
        baug << b, Eigen::VectorXd::Zero(m);
        AP = aug;
        b = baug;
    }

    Eigen::VectorXd x = AP.rows() == m ? Eigen::VectorXd(AP.partialPivLu().solve(b))
                                       : Eigen::VectorXd(AP.colPivHouseholderQr().solve(b));
    auto shape_ok = [&](const Eigen::VectorXd& v) {
        if (!v.allFinite()) return false;
        const double tol = 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v(i) < -tol) return false;
            if (i > 0 && v(i) > v(i - 1) + tol) return false;
        }
        return true;
    };
    if (!shape_ok(x)) {
        // g = U y with y >= 0 increments: nonincreasing and nonnegative by construction
        Eigen::MatrixXd U = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i; j < m; ++j) U(i, j) = 1.0;
        const auto sol = nnls(AP * U, b);
        x = U * sol.x;
        out.shape_constrained = true;
    }
    const Eigen::VectorXd gv = P * x;
    out.g_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.g_values[k] = std::max(0.0, gv(static_cast<Eigen::Index>(k)));
    out.g_values = isotonic_nonincreasing(out.g_values);

    Extension below = Extension::constant(kInf);
    if (!pb.infinite_below) {
        std::vector<double> xs, ys;
        for (std::size_t k : fit_window(t, false))
            if (out.g_values[k] > 0.0 && t[k] > 0.0) {
                xs.push_back(t[k]);
                ys.push_back(out.g_values[k]);
            }
        const double q = xs.size() >= 2 ? -loglog_slope(xs, ys) : 0.0;
        below = q > 0.0 && std::isfinite(q) ? Extension::power_law(q) : Extension::constant(out.g_values.front());
    }
    const Extension above = zero_tail ? Extension::constant(0.0) : Extension::power_law(p);
    out.g = GTransform(SampledMonotone{t, out.g_values, below, above});

    double res = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!con[k]) continue;
        res = std::max(res, std::abs(abel_forward(out.g, t[k]) - pb.rhs[k]));
    }
    out.residual = res / std::max(1.0, rmax);
    out.ill_posed = out.residual > pb.residual_tol;
    std::ostringstream msg;
    msg << "residual " << out.residual << (out.shape_constrained ? " (shape-constrained solve)" : "")
        << (out.ill_posed ? ", above tolerance: the problem is ill-posed at this resolution" : "");
    out.message = msg.str();
    return out;
}

double necessary_condition_residual(const TransportCost& tau, const MassSpecificCost& z,
                                    const std::vector<double>& slopes) {
    const auto g = g_from_z(z);
    double worst = 0.0;
    for (double t : slopes) {
        const double lhs = abel_forward(g, t), rhs = conjugate(tau, t).value;
        if (lhs == kInf && rhs == kInf) continue;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::string to_string(InverseRoute r) {
    switch (r) {
        case InverseRoute::Auto: return "auto";
        case InverseRoute::Affine: return "affine";
        case InverseRoute::Analytic: return "analytic";
        case InverseRoute::Deconvolve: return "deconvolve";
    }
    return "auto";
}

InverseRoute inverse_route_from_string(const std::string& s) {
    if (s == "auto") return InverseRoute::Auto;
    if (s == "affine") return InverseRoute::Affine;
    if (s == "analytic") return InverseRoute::Analytic;
    if (s == "deconvolve") return InverseRoute::Deconvolve;
    throw ValidationError("unknown inverse route '" + s + "'");
}

DeconvolutionProblem make_deconvolution_problem(const TransportCost& tau, const InverseOptions& o) {
    DeconvolutionProblem pb;
    pb.regularization = o.regularization;
    pb.residual_tol = o.residual_tol;
    const int M = std::max(o.grid_points, 8) - 1;
    if (const auto* p = tau.as<PowerCost>()) {
        (void)p;
        const double lo = o.t_min > 0.0 ? o.t_min : 0.1, hi = o.t_max > 0.0 ? o.t_max : 10.0;
        if (!(hi > lo)) throw ValidationError("deconvolution slope window is empty");
        for (int k = 0; k <= M; ++k) pb.t.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / M));
        pb.infinite_below = false;
    } else if (const auto* u = tau.as<UrbanPlanningCost>()) {
        // graded toward a, where the conjugate vanishes
        const double lo = std::max(u->b, o.t_min), hi = u->a;
        for (int k = 0; k <= M; ++k) {
            const double r = 1.0 - static_cast<double>(k) / M;
            pb.t.push_back(k == M ? hi : hi - (hi - lo) * r * r);
        }
        pb.infinite_below = lo == u->b;
    } else if (const auto* s = tau.as<SampledCost>()) {
        const std::size_t n = s->w.size();
        if (n < 4) throw ValidationError("deconvolution needs at least 4 samples");
        std::vector<double> seg(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) seg[i] = (s->tau[i + 1] - s->tau[i]) / (s->w[i + 1] - s->w[i]);
        // slope jumps at interior nodes; a kink is a jump 10x above the local level
        std::vector<double> jump(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) jump[i] = seg[i - 1] - seg[i];
        struct Row {
            double t, v;
            bool con;
        };
        std::vector<Row> pts;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            std::vector<double> nb;
            for (std::size_t j = (i > 3 ? i - 3 : 1); j <= std::min(n - 2, i + 3); ++j)
                if (j != i) nb.push_back(jump[j]);
            std::nth_element(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(nb.size() / 2), nb.end());
            const double noise = std::max(nb[nb.size() / 2], 1e-12 * std::max(1.0, std::abs(seg[i])));
            const bool kink = jump[i] > 10.0 * noise;
            const double ti = (s->tau[i + 1] - s->tau[i - 1]) / (s->w[i + 1] - s->w[i - 1]);
            pts.push_back({ti, s->tau[i] - ti * s->w[i], !kink});
        }
        std::reverse(pts.begin(), pts.end());
        for (const auto& r : pts) {
            if (!pb.t.empty() && !(r.t > pb.t.back() * (1.0 + 1e-12))) continue;
            if (o.t_min > 0.0 && r.t < o.t_min) continue;
            if (o.t_max > 0.0 && r.t > o.t_max) continue;
            pb.t.push_back(r.t);
            pb.rhs.push_back(std::max(0.0, r.v));
            pb.constrained.push_back(r.con);
        }
        pb.infinite_below = true;
        return pb;
    } else {
        throw UnsupportedForm("deconvolution needs a power, urban planning or sampled cost; use the affine route");
    }
    for (double t : pb.t) pb.rhs.push_back(conjugate(tau, t).value);
    return pb;
}

InverseResult solve_inverse(const TransportCost& tau, InverseRoute route, const InverseOptions& o) {
    std::vector<double> grid;
    if (const auto* s = tau.as<SampledCost>()) {
        grid = s->w;
    } else {
        double W = 10.0;
        if (const auto* pa = tau.as<PiecewiseAffineCost>()) W = std::max(W, 2.0 * pa->breakpoints.back());
        if (const auto* u = tau.as<UrbanPlanningCost>()) W = std::max(W, 4.0 * u->kink());
        for (int k = 0; k <= 64; ++k) grid.push_back(W * k / 64.0);
    }
    const auto rep = validate_admissible(tau, grid);
    if (!rep.all_passed()) {
        std::string failed;
        for (const auto& c : rep.checks)
            if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
        throw ValidationError("transport cost is not admissible (" + failed + ")");
    }
    if (route == InverseRoute::Auto) {
        if (tau.as<PowerCost>() || tau.as<UrbanPlanningCost>()) route = InverseRoute::Analytic;
        else if (tau.as<PiecewiseAffineCost>()) route = InverseRoute::Affine;
        else route = InverseRoute::Deconvolve;
    }
    InverseResult out;
    out.route = route;
    switch (route) {
        case InverseRoute::Analytic:
            out.c = analytic_inverse(tau, o.urban_variant);
            break;
        case InverseRoute::Affine:
            out.c = {invert_piecewise_affine(to_piecewise_affine(tau))};
            break;
        case InverseRoute::Deconvolve: {
            const auto pb = make_deconvolution_problem(tau, o);
            const auto d = deconvolve(pb);
            out.c = {z_from_g(d.g)};
            out.residual = d.residual;
            out.ill_posed = d.ill_posed;
            out.message = d.message;
            break;
        }
        case InverseRoute::Auto: break;
    }
    return out;
}

}  // namespace phasecost
