#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "phasecost/costs.hpp"
#include "phasecost/forward.hpp"
#include "phasecost/inverse.hpp"
#include "phasecost/io.hpp"
#include "phasecost/network2d.hpp"
#include "phasecost/profiles.hpp"

using namespace phasecost;
using io::json;
namespace fs = std::filesystem;

namespace {

// exit codes
enum Exit : int {
    kOk = 0,
    kUsage = 2,
    kValidation = 3,
    kUnsupported = 4,
    kNumeric = 5,
    kInconsistent = 6,
    kCheckForward = 10,
    kCheckNecessary = 11,
    kCheckAdmissible = 12,
    kCheckBounds = 13,
};

struct Globals {
    std::uint64_t seed = 0;
    double tol = 1e-6;
    std::string out;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int thread_cap() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* e = std::getenv("PHASECOST_THREADS")) {
        const int v = std::atoi(e);
        if (v > 0) hw = std::min(hw, static_cast<unsigned>(v));
    }
    return static_cast<int>(hw);
}

// runs f(i) for i in [0, n) on up to PHASECOST_THREADS workers
template <class F>
void parallel_for(std::size_t n, F f) {
    const int workers = std::min<int>(thread_cap(), static_cast<int>(n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// "0.25,1,4" | "log:lo:hi:n" | "lin:lo:hi:n"
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw UsageError("grid: cannot read number '" + s + "' in '" + spec + "'");
        return v;
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string p; std::getline(ss, p, sep);) parts.push_back(p);
        return parts;
    };
    if (spec.rfind("log:", 0) == 0 || spec.rfind("lin:", 0) == 0) {
        const auto p = split(spec, ':');
        if (p.size() != 4) throw UsageError("grid: expected kind:lo:hi:n, got '" + spec + "'");
        const double lo = num(p[1]), hi = num(p[2]);
        const int n = static_cast<int>(num(p[3]));
        if (n < 1 || hi < lo || (p[0] == "log" && lo <= 0.0)) throw ValidationError("grid: bad range '" + spec + "'");
        for (int k = 0; k < n; ++k) {
            const double f = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
            out.push_back(p[0] == "log" ? lo * std::pow(hi / lo, f) : lo + f * (hi - lo));
        }
    } else {
        for (const auto& s : split(spec, ','))
            if (!s.empty()) out.push_back(num(s));
    }
    if (out.empty()) throw ValidationError("empty w grid");
    for (double w : out)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("w grid values must be finite and nonnegative");
    return out;
}

std::string num_str(double v) {
    if (v == kInf) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); }

std::ofstream open_out(const std::string& path) {
    if (path.empty()) throw UsageError("--out is required");
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write " + path);
    return f;
}

std::string sidecar(const std::string& out, const std::string& suffix) {
    fs::path p(out);
    p.replace_extension();
    return p.string() + suffix;
}

// ---- forward

enum class FwdRoute { Closed, MM, Direct };

std::optional<FwdRoute> fwd_route(const std::string& s) {
    if (s == "closed_form" || s == "closed") return FwdRoute::Closed;
    if (s == "modica_mortola" || s == "mm") return FwdRoute::MM;
    if (s == "direct") return FwdRoute::Direct;
    return std::nullopt;
}

const char* name(FwdRoute r) {
    switch (r) {
        case FwdRoute::Closed: return "closed_form";
        case FwdRoute::MM: return "modica_mortola";
        case FwdRoute::Direct: return "direct";
    }
    return "";
}

// best exact route for z: closed form on steps, Modica-Mortola otherwise
FwdRoute default_route(const MassSpecificCost& z) { return z.is_step() ? FwdRoute::Closed : FwdRoute::MM; }

ForwardResult run_forward(const PhaseFieldCost& c, double w, FwdRoute r, const Globals& g) {
    if (w == 0.0) return ForwardResult{0.0, 0.0, Route::ClosedForm};
    switch (r) {
        case FwdRoute::Closed: return tau_closed_form(c.z, w);
        case FwdRoute::MM: return tau_modica_mortola(c.z, w);
        case FwdRoute::Direct: {
            DirectOptions o;
            o.seed = g.seed;
            return tau_direct(c, w, o);
        }
    }
    return {};
}

std::vector<FwdRoute> parse_routes(const std::string& s, const MassSpecificCost* z) {
    if (s == "auto") {
        if (!z) throw UsageError("route auto needs a cost");
        return {default_route(*z)};
    }
    if (s == "all") return {FwdRoute::Closed, FwdRoute::MM, FwdRoute::Direct};
    std::vector<FwdRoute> out;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) {
        const auto r = fwd_route(p);
        if (!r) throw UsageError("unknown forward route '" + p + "'");
        out.push_back(*r);
    }
    return out;
}

int cmd_forward(const std::string& c_arg, const std::string& w_spec, const std::string& route, const Globals& g) {
    const auto c = io::phase_field_cost_from_json(io::parse_json_arg(c_arg));
    const auto ws = parse_grid(w_spec);
    const auto routes = parse_routes(route, &c.z);
    struct Row {
        double w;
        FwdRoute r;
        ForwardResult f;
        std::string error;
    };
    std::vector<Row> rows;
    for (double w : ws)
        for (auto r : routes) rows.push_back({w, r, {}, {}});
    parallel_for(rows.size(), [&](std::size_t i) {
        try {
            rows[i].f = run_forward(c, rows[i].w, rows[i].r, g);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    std::ostringstream csv;
    csv << "w,tau,route,profile_max,lagrange_slope\n";
    for (const auto& r : rows) {
        if (!r.error.empty())
            csv << num_str(r.w) << ",NA," << name(r.r) << ",NA,NA\n";
        else
            csv << num_str(r.w) << ',' << num_str(r.f.tau_value) << ',' << name(r.r) << ','
                << num_str(r.f.profile_max) << ',' << num_str(r.f.lagrange_slope) << '\n';
    }
    if (g.out.empty())
        std::cout << csv.str();
    else
        open_out(g.out) << csv.str();
    for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "w = " << r.w << " (" << name(r.r) << "): " << r.error << '\n';
    return kOk;
}

// ---- invert

std::vector<double> check_slopes(const TransportCost& tau) {
    if (auto pa = tau.as<PiecewiseAffineCost>()) return pa->slopes;
    if (auto u = tau.as<UrbanPlanningCost>()) return {u->b, u->a};
    std::vector<double> s;
    if (auto sm = tau.as<SampledCost>()) {
        // central-difference slopes at interior nodes, where the deconvolution rows sit
        const std::size_t n = sm->w.size();
        for (std::size_t i = n / 10 + 1; i + n / 10 + 1 < n; ++i)
            s.push_back((sm->tau[i + 1] - sm->tau[i - 1]) / (sm->w[i + 1] - sm->w[i - 1]));
        return s;
    }
    for (double w : {0.25, 0.5, 1.0, 2.0, 4.0}) s.push_back(right_derivative(tau, w));
    return s;
}

std::vector<double> check_masses(const TransportCost& tau) {
    std::vector<double> ws{0.25, 0.5, 1.0, 2.0, 4.0};
    if (auto pa = tau.as<PiecewiseAffineCost>())
        for (double b : pa->breakpoints)
            if (b > 0.0) ws.push_back(b);
    if (auto u = tau.as<UrbanPlanningCost>()) ws.push_back(u->kink());
    if (auto s = tau.as<SampledCost>()) {
        // interior sample nodes: tau is only interpolated in between
        ws.clear();
        const std::size_t n = s->w.size();
        for (std::size_t i = n / 10 + 1; i + n / 10 + 1 < n; ++i) ws.push_back(s->w[i]);
    }
    std::sort(ws.begin(), ws.end());
    return ws;
}

int cmd_invert(const std::string& tau_arg, const std::string& route, const std::string& variant, double tmin,
               double tmax, int grid, double reg, const Globals& g) {
    const auto tau = io::transport_cost_from_json(io::parse_json_arg(tau_arg));
    InverseOptions o;
    if (variant == "smooth")
        o.urban_variant = UrbanVariant::Smooth;
    else if (variant != "step")
        throw UsageError("--variant must be step or smooth");
    o.t_min = tmin;
    o.t_max = tmax;
    o.grid_points = grid;
    o.regularization = reg;
    const auto r = solve_inverse(tau, inverse_route_from_string(route), o);
    if (g.out.empty()) throw UsageError("--out is required");
    io::write_json_file(g.out, io::to_json(r.c));

    const double nec = necessary_condition_residual(tau, r.c.z, check_slopes(tau));
    double rt = 0.0;
    const auto fr = default_route(r.c.z);
    for (double w : check_masses(tau)) rt = std::max(rt, std::abs(run_forward(r.c, w, fr, g).tau_value - eval_tau(tau, w)) / std::max(1e-300, eval_tau(tau, w)));
    const double nec_tol = std::max(g.tol, 10.0 * o.residual_tol), rt_tol = r.route == InverseRoute::Deconvolve ? 1e-2 : g.tol;
    json rep = {{"route", to_string(r.route)},
                {"residual", r.residual},
                {"ill_posed", r.ill_posed},
                {"message", r.message},
                {"checks",
                 {{"necessary", {{"value", nec}, {"tolerance", nec_tol}, {"pass", nec <= nec_tol}}},
                  {"roundtrip", {{"value", rt}, {"tolerance", rt_tol}, {"pass", rt <= rt_tol}, {"forward_route", name(fr)}}}}}};
    io::write_json_file(sidecar(g.out, ".report.json"), rep);
    std::cout << "route " << to_string(r.route) << ", residual " << r.residual << ", necessary " << nec
              << ", roundtrip " << rt << '\n';
    if (rt > rt_tol) return kCheckForward;
    if (nec > nec_tol) return kCheckNecessary;
    return kOk;
}

// ---- verify

struct CheckRow {
    std::string name;
    bool pass;
    double value, tolerance;
    std::string route;
    int category;
};

int cmd_verify(const std::string& tau_arg, const std::string& c_arg, const std::string& w_spec, const Globals& g) {
    const auto tau = io::transport_cost_from_json(io::parse_json_arg(tau_arg));
    const auto c = io::phase_field_cost_from_json(io::parse_json_arg(c_arg));
    const auto ws = parse_grid(w_spec);
    const auto fr = default_route(c.z);
    std::vector<CheckRow> checks;
    std::vector<ForwardResult> fwd(ws.size());
    parallel_for(ws.size(), [&](std::size_t i) { fwd[i] = run_forward(c, ws[i], fr, g); });

    for (std::size_t i = 0; i < ws.size(); ++i) {
        const double ref = eval_tau(tau, ws[i]);
        const double err = std::abs(fwd[i].tau_value - ref) / std::max(ref, 1e-300);
        checks.push_back({"forward w=" + num_str(ws[i]), ws[i] == 0.0 ? fwd[i].tau_value == 0.0 : err <= g.tol,
                          ws[i] == 0.0 ? fwd[i].tau_value : err, g.tol, name(fr), kCheckForward});
    }
    std::vector<double> slopes;
    for (double w : ws)
        if (w > 0.0) slopes.push_back(right_derivative(tau, w));
    std::sort(slopes.begin(), slopes.end());
    slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());
    for (double t : slopes) {
        const double res = necessary_condition_residual(tau, c.z, {t});
        const double scale = std::max(1.0, std::abs(conjugate(tau, t).value));
        checks.push_back({"necessary t=" + num_str(t), res <= g.tol * scale, res, g.tol * scale, "abel", kCheckNecessary});
    }
    {
        std::vector<double> grid{0.0}, vals{0.0};
        const double top = *std::max_element(ws.begin(), ws.end());
        for (int k = 1; k <= 40; ++k) grid.push_back(top * k / 40.0);
        std::vector<ForwardResult> out(grid.size());
        parallel_for(grid.size(), [&](std::size_t i) {
            if (i > 0) out[i] = run_forward(c, grid[i], fr, g);
        });
        for (std::size_t i = 1; i < grid.size(); ++i) vals.push_back(out[i].tau_value);
        const auto rep = validate_admissible(TransportCost::sampled(grid, vals), grid);
        for (const auto& ch : rep.checks)
            checks.push_back({"admissible " + ch.name, ch.passed, ch.measured, ch.tolerance, name(fr), kCheckAdmissible});
    }
    for (double w : ws) {
        if (w == 0.0) continue;
        double energy, top, slack;
        std::string route;
        if (c.z.is_step() && exists_minimizer(c.z, w).exists) {
            const auto p = build_step_profile(c.z, w);
            energy = p.energy, top = p.max_value(), slack = 1e-12, route = "closed_form";
        } else {
            DirectOptions o;
            o.seed = g.seed;
            const auto d = tau_direct(c, w, o);
            energy = d.tau_value, top = d.profile_max, slack = 1e-2, route = "direct";
        }
        const double lo = std::max(energy_estimate_bound(top, w), modica_mortola_bound(c, top));
        checks.push_back({"bounds w=" + num_str(w), energy >= lo * (1.0 - slack), (lo - energy) / energy, slack, route,
                          kCheckBounds});
    }

    json report = json::array();
    int code = kOk;
    std::printf("%-32s %-6s %-12s %-10s %s\n", "check", "status", "value", "tolerance", "route");
    for (const auto& ch : checks) {
        report.push_back({{"name", ch.name}, {"status", ch.pass ? "pass" : "fail"}, {"value", num_json(ch.value)},
                          {"tolerance", ch.tolerance}, {"route", ch.route}});
        std::printf("%-32s %-6s %-12.4g %-10.3g %s\n", ch.name.c_str(), ch.pass ? "pass" : "FAIL", ch.value,
                    ch.tolerance, ch.route.c_str());
        if (!ch.pass && code == kOk) code = ch.category;
    }
    if (!g.out.empty()) io::write_json_file(g.out, json{{"checks", report}, {"passed", code == kOk}});
    return code;
}

// ---- profile

int cmd_profile(const std::string& c_arg, double w, double delta, int points, const Globals& g) {
    const auto c = io::phase_field_cost_from_json(io::parse_json_arg(c_arg));
    if (!(w > 0.0)) throw ValidationError("--w must be positive");
    SampledProfile s;
    json meta;
    if (c.z.is_step()) {
        const auto ex = exists_minimizer(c.z, w);
        Profile p;
        try {
            p = build_step_profile(c.z, w);
        } catch (const NoMinimizer&) {
            p = build_step_profile(c.z, w, delta * ex.tau);
        }
        const auto lr = lagrange_slope(p, c.z, w);
        s = p.sample(points);
        meta = {{"mass", p.mass}, {"energy", p.energy}, {"lambda", num_json(lr.lambda)},
                {"exists", p.exact_minimizer}, {"route", "closed_form"}};
    } else {
        DirectOptions o;
        o.seed = g.seed;
        const auto d = tau_direct_full(c, w, o);
        s = d.profile;
        double mass = 0.0;
        for (std::size_t k = 0; k + 1 < s.y.size(); ++k) mass += (s.y[k + 1] - s.y[k]) * (s.psi[k] + s.psi[k + 1]);
        meta = {{"mass", mass}, {"energy", d.forward.tau_value}, {"lambda", d.forward.lagrange_slope},
                {"exists", exists_minimizer(c.z, w).exists}, {"route", "direct"}};
    }
    auto f = open_out(g.out);
    f << "y,psi\n";
    for (std::size_t k = 0; k < s.y.size(); ++k) f << num_str(s.y[k]) << ',' << num_str(s.psi[k]) << '\n';
    io::write_json_file(sidecar(g.out, ".json"), meta);
    return kOk;
}

// ---- deconvolve

int cmd_deconvolve(const std::string& tau_arg, double tmin, double tmax, int grid, double reg, const Globals& g) {
    const auto tau = io::transport_cost_from_json(io::parse_json_arg(tau_arg));
    InverseOptions o;
    o.t_min = tmin, o.t_max = tmax, o.grid_points = grid, o.regularization = reg;
    const auto r = deconvolve(make_deconvolution_problem(tau, o));
    auto f = open_out(g.out);
    f << "t,g\n";
    for (std::size_t k = 0; k < r.t.size(); ++k) f << num_str(r.t[k]) << ',' << num_str(r.g_values[k]) << '\n';
    io::write_json_file(sidecar(g.out, ".json"),
                        {{"residual", r.residual}, {"tail_exponent", r.tail_exponent},
                         {"shape_constrained", r.shape_constrained}, {"ill_posed", r.ill_posed}, {"message", r.message}});
    std::cout << "residual " << r.residual << (r.ill_posed ? " (ill-posed: " + r.message + ")" : "") << '\n';
    return r.ill_posed ? kNumeric : kOk;
}

// ---- simulate2d

Measure2D read_points(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ValidationError(std::string("config: \"") + key + "\" must be an array");
    Measure2D m;
    for (const auto& p : j.at(key)) {
        for (const char* f : {"x", "y", "w"})
            if (!p.contains(f) || !p.at(f).is_number())
                throw ValidationError(std::string("config: entries of \"") + key + "\" need numeric \"" + f + "\"");
        m.points.push_back({p.at("x").get<double>(), p.at("y").get<double>(), p.at("w").get<double>()});
    }
    if (j.contains("rho")) m.rho = j.at("rho").get<double>();
    return m;
}

int cmd_simulate2d(const std::string& config, const Globals& g) {
    const auto j = io::parse_json_arg(config);
    for (const char* f : {"n", "epsilon_schedule", "cost"})
        if (!j.contains(f)) throw ValidationError(std::string("config: missing field \"") + f + "\"");
    const int n = j.at("n").get<int>();
    SimConfig cfg;
    cfg.epsilon_schedule = j.at("epsilon_schedule").get<std::vector<double>>();
    cfg.c = io::phase_field_cost_from_json(j.at("cost"));
    if (j.contains("iters")) cfg.iterations = j.at("iters").get<int>();
    if (j.contains("tolerance")) cfg.tolerance = j.at("tolerance").get<double>();
    if (j.contains("smoothing")) cfg.smoothing = j.at("smoothing").get<double>();
    const auto r = minimize_2d(read_points(j, "sources"), read_points(j, "sinks"), n, cfg);

    if (g.out.empty()) throw UsageError("--out is required");
    fs::create_directories(g.out);
    const fs::path dir(g.out);
    {
        auto f = open_out((dir / "u.csv").string());
        for (int i = 0; i <= n; ++i)
            for (int jj = 0; jj <= n; ++jj)
                f << num_str(r.u[static_cast<std::size_t>(i) * (n + 1) + jj]) << (jj == n ? '\n' : ',');
    }
    const auto mag = flux_magnitude(r.sigma);
    {
        auto f = open_out((dir / "sigma_mag.csv").string());
        for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj)
                f << num_str(mag[static_cast<std::size_t>(i) * n + jj]) << (jj == n - 1 ? '\n' : ',');
    }
    {
        auto f = open_out((dir / "trace.csv").string());
        f << "iter,epsilon,energy,div_residual\n";
        for (const auto& t : r.trace)
            f << t.iteration << ',' << num_str(t.epsilon) << ',' << num_str(t.energy) << ',' << num_str(t.div_residual) << '\n';
    }
    const auto st = superlevel_connectivity(mag, n, 0.2);
    io::write_json_file((dir / "summary.json").string(),
                        {{"energy", r.energy}, {"exact_energy", r.exact_energy}, {"max_div_residual", r.max_div_residual},
                         {"components", st.components}, {"largest_fraction", st.largest_fraction},
                         {"flagged", r.flagged}, {"message", r.message}});
    std::cout << "energy " << r.exact_energy << ", max div residual " << r.max_div_residual << ", largest component "
              << st.largest_fraction << (r.flagged ? ", flagged: " + r.message : "") << '\n';
    return r.flagged ? kNumeric : kOk;
}

// ---- sweep

int cmd_sweep(const std::string& tau_arg, const std::string& w_spec, const std::string& routes_arg,
              const std::string& variant, const Globals& g) {
    const auto tau = io::transport_cost_from_json(io::parse_json_arg(tau_arg));
    const auto ws = parse_grid(w_spec);
    InverseOptions o;
    o.urban_variant = variant == "smooth" ? UrbanVariant::Smooth : UrbanVariant::Step;
    const auto inv = solve_inverse(tau, InverseRoute::Auto, o);
    const auto routes = parse_routes(routes_arg, &inv.c.z);
    const std::size_t R = routes.size();
    std::vector<double> vals(ws.size() * R, 0.0);
    std::vector<std::string> why(ws.size() * R);
    parallel_for(vals.size(), [&](std::size_t k) {
        const double w = ws[k / R];
        const auto r = routes[k % R];
        if (r == FwdRoute::Closed && !inv.c.z.is_step()) {
            why[k] = "closed form needs a step z";
            return;
        }
        try {
            vals[k] = run_forward(inv.c, w, r, g).tau_value;
        } catch (const std::exception& e) {
            why[k] = e.what();
        }
    });
    std::ostringstream csv;
    csv << "w,tau";
    for (auto r : routes) csv << ",tau_" << name(r);
    csv << ",max_rel_gap,note\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        const double ref = eval_tau(tau, ws[i]);
        csv << num_str(ws[i]) << ',' << num_str(ref);
        double gap = 0.0;
        std::string note;
        for (std::size_t r = 0; r < R; ++r) {
            const std::size_t k = i * R + r;
            if (!why[k].empty()) {
                csv << ",NA";
                note += (note.empty() ? "" : "; ") + std::string(name(routes[r])) + ": " + why[k];
                continue;
            }
            csv << ',' << num_str(vals[k]);
            if (ref > 0.0) gap = std::max(gap, std::abs(vals[k] - ref) / ref);
        }
        std::replace(note.begin(), note.end(), ',', ';');
        csv << ',' << num_str(gap) << ',' << note << '\n';
        worst = std::max(worst, gap);
    }
    if (g.out.empty())
        std::cout << csv.str();
    else
        open_out(g.out) << csv.str();
    std::cerr << "inverse route " << to_string(inv.route) << ", max cross-route relative gap " << worst << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phasecost: transport costs and phase field potentials"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "seed for randomized restarts")->default_val(0);
    app.add_option("--tol", g.tol, "tolerance for checks")->default_val(1e-6);
    app.add_option("--out", g.out, "output file (or directory for simulate2d)");
    app.fallthrough();

    std::function<int()> run;

    auto* inv = app.add_subcommand("invert", "phase field cost for a transport cost");
    std::string tau_arg, c_arg, route = "auto", variant = "step", w_spec;
    double tmin = 0.0, tmax = 0.0, reg = 0.0, w = 1.0, delta = 1e-4;
    int grid = 400, points = 401;
    inv->add_option("--tau", tau_arg, "transport cost JSON or file")->required();
    inv->add_option("--route", route, "auto|affine|analytic|deconvolve");
    inv->add_option("--variant", variant, "urban planning potential: step|smooth");
    inv->add_option("--tmin", tmin, "lower end of the slope window (deconvolution)");
    inv->add_option("--tmax", tmax, "upper end of the slope window (deconvolution)");
    inv->add_option("--grid", grid, "slope grid points (deconvolution)");
    inv->add_option("--reg", reg, "Tikhonov regularization (deconvolution)");
    inv->callback([&] { run = [&] { return cmd_invert(tau_arg, route, variant, tmin, tmax, grid, reg, g); }; });

    auto* fwd = app.add_subcommand("forward", "transport cost of a phase field cost");
    fwd->add_option("--c", c_arg, "phase field cost JSON or file")->required();
    fwd->add_option("--w", w_spec, "masses: a,b,c | log:lo:hi:n | lin:lo:hi:n")->required();
    fwd->add_option("--route", route, "auto|all|closed_form,modica_mortola,direct");
    fwd->callback([&] { run = [&] { return cmd_forward(c_arg, w_spec, route, g); }; });

    auto* ver = app.add_subcommand("verify", "check a (tau, c) pair");
    ver->add_option("--tau", tau_arg, "transport cost JSON or file")->required();
    ver->add_option("--c", c_arg, "phase field cost JSON or file")->required();
    ver->add_option("--w", w_spec, "masses: a,b,c | log:lo:hi:n | lin:lo:hi:n")->required();
    ver->callback([&] { run = [&] { return cmd_verify(tau_arg, c_arg, w_spec, g); }; });

    auto* pro = app.add_subcommand("profile", "optimal profile at mass w");
    pro->add_option("--c", c_arg, "phase field cost JSON or file")->required();
    pro->add_option("--w", w, "mass")->required();
    pro->add_option("--delta", delta, "relative energy excess of the tent when no minimizer exists");
    pro->add_option("--points", points, "samples on the half line");
    pro->callback([&] { run = [&] { return cmd_profile(c_arg, w, delta, points, g); }; });

    auto* dec = app.add_subcommand("deconvolve", "g transform by numerical deconvolution");
    dec->add_option("--tau", tau_arg, "transport cost JSON or file")->required();
    dec->add_option("--tmin", tmin, "lower end of the slope window");
    dec->add_option("--tmax", tmax, "upper end of the slope window");
    dec->add_option("--grid", grid, "slope grid points");
    dec->add_option("--reg", reg, "Tikhonov regularization");
    dec->callback([&] { run = [&] { return cmd_deconvolve(tau_arg, tmin, tmax, grid, reg, g); }; });

    auto* sim = app.add_subcommand("simulate2d", "2D network simulation");
    std::string config;
    sim->add_option("--config", config, "simulation config JSON or file")->required();
    sim->callback([&] { run = [&] { return cmd_simulate2d(config, g); }; });

    auto* sw = app.add_subcommand("sweep", "forward routes on the inverse of tau over a w grid");
    std::string routes = "all";
    sw->add_option("--tau", tau_arg, "transport cost JSON or file")->required();
    sw->add_option("--w", w_spec, "masses: a,b,c | log:lo:hi:n | lin:lo:hi:n")->required();
    sw->add_option("--routes", routes, "all|closed_form,modica_mortola,direct");
    sw->add_option("--variant", variant, "urban planning potential: step|smooth");
    sw->callback([&] { run = [&] { return cmd_sweep(tau_arg, w_spec, routes, variant, g); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    try {
        return run();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const UnsupportedForm& e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return kUnsupported;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const InconsistencyError& e) {
        std::cerr << "inconsistent: " << e.what() << '\n';
        return kInconsistent;
    } catch (const NoMinimizer& e) {
        std::cerr << "no minimizer: " << e.what() << '\n';
        return kInconsistent;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
