#pragma once

// JSON (de)serialization for configs and results. Kept apart from the numeric
// headers so they do not pull in nlohmann/json.

#include "hwvar/errors.hpp"
#include "hwvar/inversion.hpp"
#include "hwvar/oracle.hpp"
#include "hwvar/risk.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace hwvar {

using json = nlohmann::ordered_json;

/// Reads {m, radius?, trapezoid_nodes?, quad_order?}. Unknown keys are rejected.
inline InversionConfig parse_inversion_config(const json& j, InversionConfig base = {}) {
    if (!j.is_object())
        throw InputError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "m") {
            if (!value.is_number_integer())
                throw InputError("config field 'm' must be an integer");
            base.m = value.get<int>();
        } else if (key == "radius") {
            if (!value.is_number())
                throw InputError("config field 'radius' must be a number");
            base.radius = value.get<double>();
        } else if (key == "trapezoid_nodes") {
            if (!value.is_number_integer())
                throw InputError("config field 'trapezoid_nodes' must be an integer");
            base.trapezoid_nodes = value.get<long>();
        } else if (key == "quad_order") {
            if (!value.is_number_integer())
                throw InputError("config field 'quad_order' must be an integer");
            base.quad_order = value.get<int>();
        } else {
            throw InputError("unknown config field '" + key + "'");
        }
    }
    return base;
}

inline InversionConfig load_inversion_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config parse error: ") + e.what());
    }
    return parse_inversion_config(j);
}

/// Effective (resolved) inversion parameters.
inline json to_json(const InversionConfig& cfg) {
    return json{{"m", cfg.m},
                {"radius", cfg.circle_radius()},
                {"trapezoid_nodes", cfg.nodes()},
                {"quad_order", cfg.quad_order}};
}

/// {alpha, m, bracket: [lo, hi], k, coefficients_computed, flags: []}
inline json to_json(const VarResult& r) {
    return json{{"alpha", r.alpha},
                {"m", r.m},
                {"bracket", json::array({r.bracket_lo, r.bracket_hi})},
                {"k", r.k_star},
                {"coefficients_computed", r.coefficients_computed},
                {"flags", r.flags}};
}

/// {scenarios, seed, var: {alpha: value}}
inline json mc_summary_json(const oracle::McResult& r, const std::vector<double>& alphas) {
    json var = json::object();
    for (double a : alphas) {
        json key = a;
        var[key.dump()] = oracle::mc_var(r, a);
    }
    return json{{"scenarios", r.scenarios}, {"seed", r.seed}, {"var", var}};
}

} // namespace hwvar
