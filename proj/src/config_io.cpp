#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "blowup/cli_runner.hpp"

namespace blowup {

namespace {

using nlohmann::json;

constexpr std::array kRunKeys{
    "model",          "f0",     "v0",          "dr",
    "dt",             "r_max",  "profile",     "boundary_outer",
    "t_max",          "stop_fraction",         "snapshot_stride",
    "corrector_tolerance",      "corrector_max_iters", "output_dir",
};

bool is_run_key(std::string_view key) {
    return std::find(kRunKeys.begin(), kRunKeys.end(), key) != kRunKeys.end();
}

double get_number(const json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", key));
    return v.get<double>();
}

int get_integer(const json& doc, const char* key, int fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 1e9) return static_cast<int>(d);
    }
    throw ConfigError(fmt::format("{}: expected an integer", key));
}

std::string get_string(const json& doc, const char* key, std::string fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{}: expected a string", key));
    return v.get<std::string>();
}

void apply(json& doc, const Overrides& o) {
    if (o.model) doc["model"] = *o.model;
    if (o.f0) doc["f0"] = *o.f0;
    if (o.v0) doc["v0"] = *o.v0;
    if (o.dr) doc["dr"] = *o.dr;
    if (o.dt) doc["dt"] = *o.dt;
    if (o.r_max) doc["r_max"] = *o.r_max;
    if (o.profile) doc["profile"] = *o.profile;
    if (o.t_max) doc["t_max"] = *o.t_max;
    if (o.output_dir) doc["output_dir"] = *o.output_dir;
}

ModelKind read_model(const json& doc) {
    if (!doc.contains("model")) throw ConfigError("model: required key is missing");
    try {
        return parse_model(get_string(doc, "model", ""));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("model: {}", e.what()));
    }
}

// Everything except model, f0, v0 and t_max.
RunConfig read_shared(const json& doc, ModelKind model) {
    RunConfig cfg;
    cfg.model = model;
    cfg.dr = get_number(doc, "dr", cfg.dr);
    cfg.dt = get_number(doc, "dt", cfg.dt);
    cfg.r_max = get_number(doc, "r_max", cfg.r_max);
    try {
        cfg.profile = parse_profile(get_string(doc, "profile", "line"));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("profile: {}", e.what()));
    }
    try {
        cfg.boundary_outer = doc.contains("boundary_outer")
                                 ? parse_boundary(get_string(doc, "boundary_outer", ""))
                                 : matching_boundary(cfg.profile);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("boundary_outer: {}", e.what()));
    }
    cfg.stop_fraction = get_number(doc, "stop_fraction", cfg.stop_fraction);
    cfg.snapshot_stride = get_integer(doc, "snapshot_stride", cfg.snapshot_stride);

    const ToleranceIterations defaults;
    const double tolerance = get_number(doc, "corrector_tolerance", defaults.tolerance);
    const int max_iters = get_integer(doc, "corrector_max_iters", defaults.max_iterations);
    if (tolerance < 0.0) throw ConfigError("corrector_tolerance: must be >= 0 (0 selects a fixed count)");
    if (tolerance == 0.0) {
        cfg.corrector = FixedIterations{max_iters};
    } else {
        cfg.corrector = ToleranceIterations{tolerance, max_iters};
    }
    return cfg;
}

double default_t_max(double f0, double v0) {
    if (!(v0 < 0.0)) throw ConfigError("t_max: required when v0 = 0");
    return 1.2 * geodesic_prediction(f0, v0).T;
}

void check_case(double f0, double v0, const char* where) {
    if (!(f0 > 0.0)) throw ConfigError(fmt::format("{}: f0 must be positive, got {}", where, f0));
    if (!(v0 < 0.0)) throw ConfigError(fmt::format("{}: v0 must be negative, got {}", where, v0));
}

RunSpec read_run(const json& doc) {
    for (const auto& [key, value] : doc.items()) {
        if (!is_run_key(key)) throw ConfigError(fmt::format("{}: unknown key", key));
    }
    const ModelKind model = read_model(doc);
    if (!doc.contains("f0")) throw ConfigError("f0: required key is missing");
    if (!doc.contains("v0")) throw ConfigError("v0: required key is missing");

    RunSpec spec;
    spec.config = read_shared(doc, model);
    spec.config.f0 = get_number(doc, "f0", 0.0);
    spec.config.v0 = get_number(doc, "v0", 0.0);
    if (!(spec.config.f0 > 0.0)) throw ConfigError(fmt::format("f0: must be positive, got {}", spec.config.f0));
    if (!(spec.config.v0 <= 0.0)) {
        throw ConfigError(fmt::format("v0: must be negative (or zero for stationary data), got {}",
                                      spec.config.v0));
    }
    spec.config.t_max = doc.contains("t_max") ? get_number(doc, "t_max", 0.0)
                                              : default_t_max(spec.config.f0, spec.config.v0);
    spec.output_dir = get_string(doc, "output_dir", spec.output_dir);
    spec.config.validate();
    return spec;
}

SweepSpec read_sweep(const json& doc) {
    for (const auto& [key, value] : doc.items()) {
        if (key == "cases") continue;
        if (key == "f0" || key == "v0") {
            throw ConfigError(fmt::format("{}: set per case in a sweep document", key));
        }
        if (!is_run_key(key)) throw ConfigError(fmt::format("{}: unknown key", key));
    }
    SweepSpec spec;
    spec.model = read_model(doc);
    spec.shared = read_shared(doc, spec.model);
    if (doc.contains("t_max")) spec.t_max = get_number(doc, "t_max", 0.0);
    spec.output_dir = get_string(doc, "output_dir", spec.output_dir);

    const auto& cases = doc.at("cases");
    if (!cases.is_array()) throw ConfigError("cases: expected an array");
    if (cases.empty()) throw ConfigError("cases: sweep needs at least one case");
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& c = cases[k];
        const std::string where = fmt::format("cases[{}]", k);
        SweepCase entry{};
        if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number()) {
            entry = {c[0].get<double>(), c[1].get<double>()};
        } else if (c.is_object() && c.size() == 2 && c.contains("f0") && c.contains("v0") &&
                   c["f0"].is_number() && c["v0"].is_number()) {
            entry = {c["f0"].get<double>(), c["v0"].get<double>()};
        } else {
            throw ConfigError(fmt::format("{}: expected [f0, v0] or {{\"f0\": .., \"v0\": ..}}", where));
        }
        check_case(entry.f0, entry.v0, where.c_str());
        spec.cases.push_back(entry);
    }
    for (std::size_t k = 0; k < spec.cases.size(); ++k) {
        try {
            spec.case_config(k).validate();
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("cases[{}]: {}", k, e.what()));
        }
    }
    return spec;
}

}  // namespace

RunConfig SweepSpec::case_config(std::size_t index) const {
    RunConfig cfg = shared;
    cfg.model = model;
    cfg.f0 = cases.at(index).f0;
    cfg.v0 = cases.at(index).v0;
    cfg.t_max = t_max ? *t_max : default_t_max(cfg.f0, cfg.v0);
    return cfg;
}

ConfigDocument parse_config(std::string_view text, const Overrides& overrides) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("malformed config document: {}", e.what()));
    }
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    apply(doc, overrides);
    try {
        if (doc.contains("cases")) return read_sweep(doc);
        return read_run(doc);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config document: {}", e.what()));
    }
}

std::string render_config(const RunSpec& spec) {
    const RunConfig& c = spec.config;
    json doc = json::object();
    doc["model"] = std::string(to_string(c.model));
    doc["f0"] = c.f0;
    doc["v0"] = c.v0;
    doc["dr"] = c.dr;
    doc["dt"] = c.dt;
    doc["r_max"] = c.r_max;
    doc["profile"] = std::string(to_string(c.profile));
    doc["boundary_outer"] = std::string(to_string(c.boundary_outer));
    doc["t_max"] = c.t_max;
    doc["stop_fraction"] = c.stop_fraction;
    doc["snapshot_stride"] = c.snapshot_stride;
    if (const auto* fixed = std::get_if<FixedIterations>(&c.corrector)) {
        doc["corrector_tolerance"] = 0.0;
        doc["corrector_max_iters"] = fixed->count;
    } else {
        const auto& tol = std::get<ToleranceIterations>(c.corrector);
        doc["corrector_tolerance"] = tol.tolerance;
        doc["corrector_max_iters"] = tol.max_iterations;
    }
    doc["output_dir"] = spec.output_dir;
    return doc.dump(2);
}

}  // namespace blowup
