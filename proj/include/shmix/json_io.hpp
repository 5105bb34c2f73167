#pragma once

// JSON views of configurations and reports. Doubles are printed with enough
// digits to round-trip exactly.

#include <string>

#include "json.hpp"

#include "shmix/calibration.hpp"
#include "shmix/experiments.hpp"
#include "shmix/theory.hpp"

namespace shmix {

using json = nlohmann::ordered_json;

inline json to_json(const ScenarioConfig& c) {
    json tests = json::array();
    for (auto t : c.tests) tests.push_back(std::string(to_string(t)));
    return json{
        {"name", c.name},
        {"model", {{"gamma", c.model.gamma()}, {"scale", c.model.scale()}}},
        {"m", c.m},
        {"n", c.n},
        {"regime", std::string(to_string(c.regime))},
        {"beta", c.beta},
        {"grid", c.grid},
        {"tests", tests},
        {"level", c.level},
        {"power_reps", c.power_reps},
        {"calib_reps", c.calib_reps},
        {"master_seed", c.master_seed},
        {"force_null", c.force_null},
        {"randomized_tailrun", c.randomized_tailrun},
        {"assumptions", c.assumptions},
    };
}

namespace detail {

template <class T>
T field(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("field '") + key + "': missing");
    return field<T>(j, key, T{});
}

}  // namespace detail

/// Parses and validates a scenario; every problem names the offending field.
inline ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
    ScenarioConfig c;
    c.name = detail::field<std::string>(j, "name", c.name);

    double gamma = 2.0, scale = 1.0;
    if (j.contains("model")) {
        const json& model = j.at("model");
        if (!model.is_object()) throw ConfigError("field 'model': must be an object with gamma and scale");
        gamma = detail::field<double>(model, "gamma", gamma);
        scale = detail::field<double>(model, "scale", scale);
    }
    try {
        c.model = GGParams(gamma, scale);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("field 'model': ") + e.what());
    }

    c.m = detail::required<std::size_t>(j, "m");
    c.n = detail::required<std::size_t>(j, "n");
    const auto regime = detail::required<std::string>(j, "regime");
    if (auto r = parse_regime(regime)) {
        c.regime = *r;
    } else {
        throw ConfigError("field 'regime': expected 'sparse' or 'dense', got '" + regime + "'");
    }
    c.beta = detail::required<double>(j, "beta");
    c.grid = detail::required<std::vector<double>>(j, "grid");
    if (j.contains("tests")) {
        c.tests.clear();
        for (const auto& name : detail::field<std::vector<std::string>>(j, "tests", {})) {
            auto id = parse_stat_id(name);
            if (!id) throw ConfigError("field 'tests': unknown test '" + name + "'");
            c.tests.push_back(*id);
        }
    }
    c.level = detail::field<double>(j, "level", c.level);
    c.power_reps = detail::field<std::size_t>(j, "power_reps", c.power_reps);
    c.calib_reps = detail::field<std::size_t>(j, "calib_reps", c.calib_reps);
    c.master_seed = detail::field<std::uint64_t>(j, "master_seed", c.master_seed);
    c.force_null = detail::field<bool>(j, "force_null", c.force_null);
    c.randomized_tailrun = detail::field<bool>(j, "randomized_tailrun", c.randomized_tailrun);
    c.assumptions = detail::field<std::string>(j, "assumptions", c.assumptions);
    c.validate();
    return c;
}

inline json to_json(const TestPower& r) {
    return json{{"test", std::string(to_string(r.test))},
                {"power", r.power},
                {"ci_half_width", r.ci_half_width},
                {"reject_count", r.reject_count},
                {"reps", r.reps}};
}

/// Sidecar written next to the power CSV.
inline json to_json(const PowerCurve& curve) {
    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back({{"grid_value", p.grid_value}, {"epsilon", p.epsilon}, {"mu", p.mu}});
    }
    return json{{"config", to_json(curve.config)},
                {"boundary_marker", curve.boundary_marker},
                {"master_seed", curve.config.master_seed},
                {"assumptions", curve.config.assumptions},
                {"points", points}};
}

inline json to_json(const NullLevelReport& report) {
    json sizes = json::array();
    for (const auto& r : report.sizes) sizes.push_back(to_json(r));
    return json{{"config", to_json(report.config)},
                {"lrt_epsilon", report.epsilon},
                {"lrt_mu", report.mu},
                {"sizes", sizes}};
}

inline json to_json(const ConditionReport& r) {
    return json{{"lhs", r.lhs}, {"scale", r.scale}, {"ratio", r.ratio}, {"verdict", std::string(to_string(r.verdict))}};
}

inline ConditionReport condition_report_from_json(const json& j) {
    const auto verdict = j.at("verdict").get<std::string>();
    Verdict v = Verdict::Inconclusive;
    if (verdict == "yes") v = Verdict::Yes;
    else if (verdict == "no") v = Verdict::No;
    else if (verdict != "inconclusive") throw ConfigError("unknown verdict '" + verdict + "'");
    return {j.at("lhs").get<double>(), j.at("scale").get<double>(), j.at("ratio").get<double>(), v};
}

}  // namespace shmix
