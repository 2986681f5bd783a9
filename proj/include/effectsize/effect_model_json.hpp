#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "effectsize/effect_model.hpp"
#include "effectsize/errors.hpp"

namespace effectsize {

using json = nlohmann::json;

inline constexpr int kDistributionSchemaVersion = 1;

namespace detail {

inline const json& require_key(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'", key);
    return j.at(key);
}

inline double number_at(const json& j, const char* key) {
    const json& v = require_key(j, key);
    if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number", key);
    return v.get<double>();
}

inline std::vector<double> numbers_at(const json& j, const char* key) {
    const json& v = require_key(j, key);
    if (!v.is_array()) throw ValidationError(std::string("field '") + key + "' must be an array", key);
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError(std::string("field '") + key + "' must hold numbers", key);
        out.push_back(x.get<double>());
    }
    return out;
}

inline void check_schema_version(const json& j, int supported, bool required) {
    if (!j.contains("schema_version")) {
        if (required) throw ValidationError("missing field 'schema_version'", "schema_version");
        return;
    }
    const json& v = j.at("schema_version");
    if (!v.is_number_integer()) throw ValidationError("schema_version must be an integer", "schema_version");
    if (v.get<int>() != supported) throw SchemaVersionError(v.get<int>(), supported);
}

} // namespace detail

inline json component_to_json(const WeightedComponent& wc) {
    json j{{"weight", wc.weight}};
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, PointMass>) {
                j["kind"] = "point_mass";
                j["value"] = c.value;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                j["kind"] = "uniform";
                j["lo"] = c.lo;
                j["hi"] = c.hi;
            } else if constexpr (std::is_same_v<T, Normal>) {
                j["kind"] = "normal";
                j["center"] = c.center;
                j["scale"] = c.scale;
            } else {
                j["kind"] = "discrete";
                j["values"] = c.values;
                j["masses"] = c.masses;
            }
        },
        wc.component.kind());
    return j;
}

inline EffectComponent component_from_json(const json& j) {
    const json& kind = detail::require_key(j, "kind");
    if (!kind.is_string()) throw ValidationError("field 'kind' must be a string", "kind");
    const auto k = kind.get<std::string>();
    if (k == "point_mass") return EffectComponent::point_mass(detail::number_at(j, "value"));
    if (k == "uniform") return EffectComponent::uniform(detail::number_at(j, "lo"), detail::number_at(j, "hi"));
    if (k == "normal") return EffectComponent::normal(detail::number_at(j, "center"), detail::number_at(j, "scale"));
    if (k == "discrete")
        return EffectComponent::discrete(detail::numbers_at(j, "values"), detail::numbers_at(j, "masses"));
    throw ValidationError("unknown component kind '" + k + "'", "kind");
}

inline json to_json(const EffectDistribution& dist) {
    json components = json::array();
    for (const auto& c : dist.components()) components.push_back(component_to_json(c));
    return json{{"schema_version", kDistributionSchemaVersion}, {"units", dist.units()}, {"components", components}};
}

// schema_version may be omitted (taken as current) when a distribution is
// embedded in a request; a different version is rejected.
inline EffectDistribution distribution_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("distribution must be a JSON object", "distribution");
    detail::check_schema_version(j, kDistributionSchemaVersion, false);
    const json& comps = detail::require_key(j, "components");
    if (!comps.is_array()) throw ValidationError("field 'components' must be an array", "components");
    std::vector<WeightedComponent> parts;
    for (const auto& c : comps) parts.push_back({detail::number_at(c, "weight"), component_from_json(c)});
    std::string units;
    if (j.contains("units")) {
        if (!j.at("units").is_string()) throw ValidationError("field 'units' must be a string", "units");
        units = j.at("units").get<std::string>();
    }
    return EffectDistribution(std::move(parts), std::move(units));
}

} // namespace effectsize
