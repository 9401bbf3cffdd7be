#include "phasecost/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace phasecost::io {

namespace {

double num(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key)) throw ValidationError(std::string(ctx) + ": missing field \"" + key + "\"");
    const auto& v = j.at(key);
    if (v.is_string() && (v == "inf" || v == "Infinity")) return kInf;
    if (!v.is_number()) throw ValidationError(std::string(ctx) + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

std::vector<double> nums(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw ValidationError(std::string(ctx) + ": field \"" + key + "\" must be an array");
    std::vector<double> out;
    std::size_t i = 0;
    for (const auto& v : j.at(key)) {
        if (v.is_string() && (v == "inf" || v == "Infinity"))
            out.push_back(kInf);
        else if (v.is_number())
            out.push_back(v.get<double>());
        else
            throw ValidationError(std::string(ctx) + ": entry " + std::to_string(i) + " of \"" + key +
                                  "\" is not a number");
        ++i;
    }
    return out;
}

json num_or_inf(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

json array_with_inf(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num_or_inf(x));
    return a;
}

std::string type_of(const json& j, const char* ctx) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw ValidationError(std::string(ctx) + ": expected an object with a string \"type\"");
    return j.at("type").get<std::string>();
}

json extension_json(const Extension& e) {
    return {{"kind", e.kind == Extension::Kind::Constant ? "constant" : "power_law"}, {"value", num_or_inf(e.value)}};
}

Extension extension_from(const json& j) {
    const std::string k = j.at("kind").get<std::string>();
    const double v = num(j, "value", "extension");
    if (k == "constant") return Extension::constant(v);
    if (k == "power_law") return Extension::power_law(v);
    throw ValidationError("extension: unknown kind \"" + k + "\"");
}

}  // namespace

json to_json(const TransportCost& tau) {
    if (auto p = tau.as<PowerCost>()) return {{"type", "power"}, {"alpha", p->alpha}};
    if (auto u = tau.as<UrbanPlanningCost>()) return {{"type", "urban_planning"}, {"a", u->a}, {"b", u->b}, {"d", u->d}};
    if (auto pa = tau.as<PiecewiseAffineCost>())
        return {{"type", "piecewise_affine"}, {"breakpoints", pa->breakpoints}, {"slopes", pa->slopes}};
    const auto& s = *tau.as<SampledCost>();
    return {{"type", "sampled"}, {"w", s.w}, {"tau", s.tau}};
}

TransportCost transport_cost_from_json(const json& j) {
    const char* ctx = "transport cost";
    const std::string t = type_of(j, ctx);
    if (t == "power") return TransportCost::power(num(j, "alpha", ctx));
    if (t == "urban_planning") return TransportCost::urban_planning(num(j, "a", ctx), num(j, "b", ctx), num(j, "d", ctx));
    if (t == "piecewise_affine")
        return TransportCost::piecewise_affine(nums(j, "breakpoints", ctx), nums(j, "slopes", ctx));
    if (t == "sampled") return TransportCost::sampled(nums(j, "w", ctx), nums(j, "tau", ctx));
    throw ValidationError("transport cost: unknown type \"" + t + "\"");
}

json to_json(const MassSpecificCost& z) {
    if (auto s = z.as<StepFunction>())
        return {{"type", "step"},
                {"thresholds", s->thresholds},
                {"levels", array_with_inf(s->levels)},
                {"final_level", s->final_level}};
    if (auto s = z.as<SampledMonotone>()) {
        json j = {{"type", "sampled"}, {"phi", s->x}, {"z", s->v}};
        j["below"] = extension_json(s->below);
        j["above"] = extension_json(s->above);
        return j;
    }
    const auto& a = *z.as<AnalyticMonotone>();
    if (a.name.empty()) throw ValidationError("analytic cost without a registered name cannot be serialized");
    json j = {{"type", "analytic"}, {"name", a.name}};
    for (const auto& [k, v] : a.params) j[k] = v;
    return j;
}

MassSpecificCost mass_specific_cost_from_json(const json& j) {
    const char* ctx = "phase field cost";
    const std::string t = type_of(j, ctx);
    if (t == "step") {
        StepFunction s{nums(j, "thresholds", ctx), nums(j, "levels", ctx), num(j, "final_level", ctx)};
        return MassSpecificCost(std::move(s));
    }
    if (t == "sampled") {
        SampledMonotone s;
        s.x = nums(j, "phi", ctx);
        s.v = nums(j, "z", ctx);
        // without explicit extensions: +inf left of the grid unless it starts at 0, constant after
        s.below = j.contains("below") ? extension_from(j.at("below")) : Extension::constant(kInf);
        s.above = j.contains("above") ? extension_from(j.at("above"))
                                      : Extension::constant(s.v.empty() ? 0.0 : s.v.back());
        return MassSpecificCost(std::move(s));
    }
    if (t == "analytic") {
        if (!j.contains("name")) throw ValidationError("phase field cost: analytic form needs \"name\"");
        const std::string name = j.at("name").get<std::string>();
        if (name == "power_law") return power_law_z(num(j, "coefficient", ctx), num(j, "exponent", ctx));
        if (name == "urban_smooth") return urban_smooth_z(num(j, "a", ctx), num(j, "b", ctx), num(j, "d", ctx));
        throw ValidationError("phase field cost: unknown analytic name \"" + name + "\"");
    }
    throw ValidationError("phase field cost: unknown type \"" + t + "\"");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

json parse_json_arg(const std::string& text_or_path) {
    const auto first = text_or_path.find_first_not_of(" \t\n");
    if (first != std::string::npos && text_or_path[first] == '{') {
        try {
            return json::parse(text_or_path);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("inline JSON: ") + e.what());
        }
    }
    return read_json_file(text_or_path);
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace phasecost::io
