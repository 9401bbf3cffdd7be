#include "phasecost/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include "phasecost/common.hpp"

namespace phasecost::quad {

namespace {

// Kronrod abscissae (descending); odd indices are the Gauss 7-point nodes.
constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk15(const Integrand& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * wgk[7];
    double rg = fc * wg[3];
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * xgk[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        rk += wgk[j] * (fv1[j] + fv2[j]);
        if (j % 2 == 1) rg += wg[j / 2] * (fv1[j] + fv2[j]);
    }
    const double mean = 0.5 * rk;
    double asc = wgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) asc += wgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    asc *= std::abs(hl);
    double err = std::abs((rk - rg) * hl);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    return {a, b, rk * hl, err};
}

void check_finite(double v, double a, double b) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "integrand not finite on [" << a << ", " << b << "]";
        throw NumericError(os.str());
    }
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, const Options& opt) {
    Result res;
    if (a == b) return res;
    std::priority_queue<Piece> heap;
    Piece p = gk15(f, a, b);
    res.evaluations = 15;
    heap.push(p);
    double total = p.value, err = p.error;
    while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (static_cast<int>(heap.size()) >= opt.max_intervals) {
            res.converged = false;
            break;
        }
        Piece top = heap.top();
        const double mid = 0.5 * (top.a + top.b);
        if (mid == top.a || mid == top.b) {
            res.converged = false;
            break;
        }
        heap.pop();
        Piece l = gk15(f, top.a, mid), r = gk15(f, mid, top.b);
        res.evaluations += 30;
        total += l.value + r.value - top.value;
        err += l.error + r.error - top.error;
        heap.push(l);
        heap.push(r);
        // resum now and then so cancellation in the running totals cannot drift
        if (res.evaluations % 3000 == 0) {
            auto copy = heap;
            total = err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().error;
                copy.pop();
            }
        }
    }
    double t = 0.0, e = 0.0;
    while (!heap.empty()) {
        t += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    check_finite(t, a, b);
    res.value = t;
    res.error = e;
    return res;
}

Result integrate_endpoints(const Integrand& f, double a, double b, const Options& opt) {
    if (a == b) return {};
    const double len = b - a;
    const double hp = 0.5 * std::numbers::pi;
    auto g = [&](double u) {
        // keep the node close to whichever end it belongs to, in absolute terms
        const double s = std::sin(hp * u), c = std::cos(hp * u);
        const double x = u < 0.5 ? a + len * s * s : b - len * c * c;
        const double jac = len * hp * 2.0 * s * c;
        if (jac == 0.0) return 0.0;
        return f(x) * jac;
    };
    return integrate(g, 0.0, 1.0, opt);
}

Result integrate_pieces(const Integrand& f, double a, double b, std::vector<double> cuts,
                        const Options& opt) {
    std::vector<double> pts{a};
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts)
        if (c > a && c < b && c > pts.back()) pts.push_back(c);
    pts.push_back(b);
    Result res;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        Result r = integrate_endpoints(f, pts[i], pts[i + 1], opt);
        res.value += r.value;
        res.error += r.error;
        res.evaluations += r.evaluations;
        res.converged = res.converged && r.converged;
    }
    return res;
}

namespace {

// Shared shell summation. next(k) gives the k-th shell [lo, hi].
template <class ShellFn>
Result sum_shells(const Integrand& f, ShellFn shell, const Options& opt,
                  const std::vector<double>& cuts, bool throw_on_divergence) {
    Result res;
    double prev = 0.0, prev_ratio = 0.0;
    int small = 0, growing = 0;
    const int max_shells = 1000;
    for (int k = 0; k < max_shells; ++k) {
        auto [lo, hi] = shell(k);
        if (!(hi > lo)) break;
        Result r = integrate_pieces(f, lo, hi, cuts, opt);
        res.value += r.value;
        res.error += r.error;
        res.evaluations += r.evaluations;
        res.converged = res.converged && r.converged;
        const double cur = r.value;
        const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(res.value));
        if (k > 0 && prev != 0.0) {
            const double ratio = cur / prev;
            if (std::abs(ratio) >= 1.0 - 1e-3)
                ++growing;
            else
                growing = 0;
            if (ratio > 0.0 && ratio < 0.95 && std::abs(ratio - prev_ratio) < 1e-2 * ratio) {
                const double tail = cur * ratio / (1.0 - ratio);
                // an exactly geometric sequence of shells means a pure power law: trust the sum
                const bool geometric = std::abs(ratio - prev_ratio) < 1e-9 * ratio;
                if (std::abs(tail) <= tol || (geometric && std::abs(tail) <= 1e-3 * std::abs(res.value))) {
                    res.value += tail;
                    res.error += std::abs(tail) * 1e-2;
                    return res;
                }
            }
            prev_ratio = ratio;
        }
        if (std::abs(cur) <= 0.1 * tol)
            ++small;
        else
            small = 0;
        if (small >= 3) return res;
        if ((growing >= 8 && k > 10) || std::abs(res.value) > 1e300) {
            if (throw_on_divergence) throw NumericError("divergent integral: shell contributions do not decay");
            res.value = kInf;
            res.converged = false;
            return res;
        }
        prev = cur;
    }
    if (throw_on_divergence) throw NumericError("integral over unbounded range did not settle");
    res.value = kInf;
    res.converged = false;
    return res;
}

}  // namespace

Result integrate_to_infinity(const Integrand& f, double a, double scale, const Options& opt,
                             std::vector<double> cuts) {
    if (!(scale > 0.0)) throw DomainError("integrate_to_infinity: scale must be positive");
    auto shell = [&](int k) -> std::pair<double, double> {
        const double lo = k == 0 ? a : a + scale * std::ldexp(1.0, k - 1);
        return {lo, a + scale * std::ldexp(1.0, k)};
    };
    return sum_shells(f, shell, opt, cuts, true);
}

Result integrate_from_zero(const Integrand& f, double b, const Options& opt, std::vector<double> cuts) {
    if (!(b > 0.0)) return {};
    auto shell = [&](int k) -> std::pair<double, double> {
        return {std::ldexp(b, -(k + 1)), std::ldexp(b, -k)};
    };
    return sum_shells(f, shell, opt, cuts, false);
}

}  // namespace phasecost::quad
