#pragma once

// JSON scenario files. Unknown keys are rejected at every level.
//
// {
//   "name": "...",
//   "components": [ {"kind": "pareto", "alpha": 5, "label": "p5"},
//                   {"kind": "arch1", "alpha0": 0.25, "alpha1": 0.476, "burn_in": 1000},
//                   {"kind": "squared_fgn", "hurst": 0.75},
//                   {"kind": "gaussian"} ],
//   "unmixer": {"kind": "amuse", "lag": 1} | {"kind": "sobi", "lags": [1,2,3]} | {"kind": "fobi"},
//   "sample_sizes": [300, 1000], "replications": 200,
//   "tail": {"rule": "power", "alpha": 0.25} | {"rule": "fixed", "k": 16} | {"rule": "sqrt"} | {"rule": "log"},
//   "estimators": ["hill", "moment"], "seed": 1,
//   "mixing": {"kind": "uniform", "lo": -100, "hi": 100, "max_condition": 1e6},
//   "histogram": {"lo": -2, "hi": 2, "width": 0.05},
//   "agreement_eps": 0.05,
//   "rate": {"gamma_max": 0.2, "c_exponent": 0.4}
// }

#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "latent_evi/experiments.hpp"

namespace latent_evi {

/// A scenario file that fails validation.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (auto allowed : keys) ok = ok || k == allowed;
        if (!ok) throw ConfigError("unknown field '" + k + "' in " + std::string(where));
    }
}

inline const json& require(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) throw ConfigError("missing field '" + std::string(key) + "' in " + std::string(where));
    return obj.at(key);
}

inline double number(const json& v, std::string_view what) {
    if (!v.is_number()) throw ConfigError(std::string(what) + " must be a number");
    return v.get<double>();
}

inline std::size_t count(const json& v, std::string_view what) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(std::string(what) + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

inline std::string text(const json& v, std::string_view what) {
    if (!v.is_string()) throw ConfigError(std::string(what) + " must be a string");
    return v.get<std::string>();
}

inline GeneratorSpec component_from_json(const json& c) {
    const auto kind = text(require(c, "kind", "component"), "component kind");
    std::string label = c.contains("label") ? text(c.at("label"), "component label") : std::string();
    if (kind == "pareto") {
        allow_keys(c, "pareto component", {"kind", "label", "alpha"});
        return GeneratorSpec::pareto(number(require(c, "alpha", "pareto component"), "alpha"), label);
    }
    if (kind == "arch1") {
        allow_keys(c, "arch1 component", {"kind", "label", "alpha0", "alpha1", "burn_in"});
        std::size_t burn = c.contains("burn_in") ? count(c.at("burn_in"), "burn_in") : 1000;
        return GeneratorSpec::arch1(number(require(c, "alpha0", "arch1 component"), "alpha0"),
                                    number(require(c, "alpha1", "arch1 component"), "alpha1"), burn, label);
    }
    if (kind == "squared_fgn") {
        allow_keys(c, "squared_fgn component", {"kind", "label", "hurst"});
        return GeneratorSpec::squared_fgn(number(require(c, "hurst", "squared_fgn component"), "hurst"), label);
    }
    if (kind == "gaussian") {
        allow_keys(c, "gaussian component", {"kind", "label"});
        return GeneratorSpec::gaussian(label);
    }
    throw ConfigError("unknown component kind '" + kind + "'");
}

inline json component_to_json(const GeneratorSpec& g) {
    json c{{"kind", std::string(to_string(g.kind))}};
    if (!g.label.empty()) c["label"] = g.label;
    switch (g.kind) {
        case GeneratorSpec::Kind::pareto: c["alpha"] = g.alpha; break;
        case GeneratorSpec::Kind::arch1:
            c["alpha0"] = g.alpha0;
            c["alpha1"] = g.alpha1;
            c["burn_in"] = g.burn_in;
            break;
        case GeneratorSpec::Kind::squared_fgn: c["hurst"] = g.hurst; break;
        case GeneratorSpec::Kind::gaussian: break;
    }
    return c;
}

inline UnmixerSpec unmixer_from_json(const json& u) {
    const auto kind = text(require(u, "kind", "unmixer"), "unmixer kind");
    if (kind == "amuse") {
        allow_keys(u, "amuse unmixer", {"kind", "lag"});
        return UnmixerSpec::amuse(u.contains("lag") ? count(u.at("lag"), "lag") : 1);
    }
    if (kind == "sobi") {
        allow_keys(u, "sobi unmixer", {"kind", "lags", "tol", "max_sweeps"});
        LagSet lags = LagSet::range(1, 12);
        if (u.contains("lags")) {
            if (!u.at("lags").is_array()) throw ConfigError("sobi lags must be an array");
            lags.lags.clear();
            for (const auto& l : u.at("lags")) lags.lags.push_back(count(l, "lag"));
        }
        auto s = UnmixerSpec::sobi(std::move(lags));
        if (u.contains("tol")) s.tol = number(u.at("tol"), "tol");
        if (u.contains("max_sweeps")) s.max_sweeps = static_cast<int>(count(u.at("max_sweeps"), "max_sweeps"));
        return s;
    }
    if (kind == "fobi") {
        allow_keys(u, "fobi unmixer", {"kind"});
        return UnmixerSpec::fobi();
    }
    if (kind == "identity") {
        allow_keys(u, "identity unmixer", {"kind"});
        return UnmixerSpec::identity();
    }
    throw ConfigError("unknown unmixer kind '" + kind + "'");
}

inline json unmixer_to_json(const UnmixerSpec& u) {
    switch (u.kind) {
        case UnmixerSpec::Kind::amuse: return {{"kind", "amuse"}, {"lag", u.lag}};
        case UnmixerSpec::Kind::sobi:
            return {{"kind", "sobi"}, {"lags", u.lags.lags}, {"tol", u.tol}, {"max_sweeps", u.max_sweeps}};
        case UnmixerSpec::Kind::fobi: return {{"kind", "fobi"}};
        case UnmixerSpec::Kind::identity: return {{"kind", "identity"}};
    }
    return {};
}

inline TailSpec tail_from_json(const json& t) {
    const auto rule = text(require(t, "rule", "tail"), "tail rule");
    try {
        if (rule == "fixed") {
            allow_keys(t, "tail", {"rule", "k"});
            const auto k = count(require(t, "k", "tail"), "k");
            if (k < 1) throw ConfigError("tail k must be >= 1");
            return TailSpec::fixed(k);
        }
        if (rule == "power") {
            allow_keys(t, "tail", {"rule", "alpha"});
            return TailSpec::power(number(require(t, "alpha", "tail"), "tail alpha"));
        }
        if (rule == "sqrt") {
            allow_keys(t, "tail", {"rule"});
            return TailSpec::square_root();
        }
        if (rule == "log") {
            allow_keys(t, "tail", {"rule"});
            return TailSpec::logarithmic();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown tail rule '" + rule + "'");
}

inline json tail_to_json(const TailSpec& t) {
    switch (t.rule) {
        case TailSpec::Rule::fixed: return {{"rule", "fixed"}, {"k", t.k}};
        case TailSpec::Rule::power: return {{"rule", "power"}, {"alpha", t.alpha}};
        case TailSpec::Rule::sqrt: return {{"rule", "sqrt"}};
        case TailSpec::Rule::log: return {{"rule", "log"}};
    }
    return {};
}

}  // namespace detail

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    detail::allow_keys(j, "scenario",
                       {"name", "components", "unmixer", "sample_sizes", "replications", "tail", "estimators", "seed",
                        "mixing", "histogram", "agreement_eps", "rate"});
    ScenarioSpec s;
    try {
        if (j.contains("name")) s.name = detail::text(j.at("name"), "name");
        const auto& comps = detail::require(j, "components", "scenario");
        if (!comps.is_array()) throw ConfigError("components must be an array");
        for (const auto& c : comps) s.components.push_back(detail::component_from_json(c));
        s.unmixer = detail::unmixer_from_json(detail::require(j, "unmixer", "scenario"));
        const auto& sizes = detail::require(j, "sample_sizes", "scenario");
        if (!sizes.is_array()) throw ConfigError("sample_sizes must be an array");
        for (const auto& n : sizes) s.sample_sizes.push_back(detail::count(n, "sample size"));
        if (j.contains("replications")) s.replications = detail::count(j.at("replications"), "replications");
        if (j.contains("tail")) s.tail = detail::tail_from_json(j.at("tail"));
        if (j.contains("estimators")) {
            if (!j.at("estimators").is_array()) throw ConfigError("estimators must be an array");
            s.estimators.clear();
            for (const auto& e : j.at("estimators")) s.estimators.push_back(parse_evi_method(detail::text(e, "estimator")));
        }
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
            s.seed.root = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("mixing")) {
            const auto& m = j.at("mixing");
            const auto kind = detail::text(detail::require(m, "kind", "mixing"), "mixing kind");
            if (kind == "identity") {
                detail::allow_keys(m, "mixing", {"kind"});
                s.mixing.kind = MixingSpec::Kind::identity;
            } else if (kind == "uniform") {
                detail::allow_keys(m, "mixing", {"kind", "lo", "hi", "max_condition"});
                if (m.contains("lo")) s.mixing.lo = detail::number(m.at("lo"), "mixing lo");
                if (m.contains("hi")) s.mixing.hi = detail::number(m.at("hi"), "mixing hi");
                if (m.contains("max_condition")) s.mixing.max_condition = detail::number(m.at("max_condition"), "max_condition");
            } else {
                throw ConfigError("unknown mixing kind '" + kind + "'");
            }
        }
        if (j.contains("histogram")) {
            const auto& h = j.at("histogram");
            detail::allow_keys(h, "histogram", {"lo", "hi", "width"});
            if (h.contains("lo")) s.histogram.lo = detail::number(h.at("lo"), "histogram lo");
            if (h.contains("hi")) s.histogram.hi = detail::number(h.at("hi"), "histogram hi");
            if (h.contains("width")) s.histogram.width = detail::number(h.at("width"), "histogram width");
        }
        if (j.contains("agreement_eps")) s.agreement_eps = detail::number(j.at("agreement_eps"), "agreement_eps");
        if (j.contains("rate")) {
            const auto& r = j.at("rate");
            detail::allow_keys(r, "rate", {"gamma_max", "c_exponent"});
            s.rate = RateInputs{detail::number(detail::require(r, "gamma_max", "rate"), "gamma_max"),
                                detail::number(detail::require(r, "c_exponent", "rate"), "c_exponent")};
        }
        s.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["components"] = nlohmann::json::array();
    for (const auto& c : s.components) j["components"].push_back(detail::component_to_json(c));
    j["unmixer"] = detail::unmixer_to_json(s.unmixer);
    j["sample_sizes"] = s.sample_sizes;
    j["replications"] = s.replications;
    j["tail"] = detail::tail_to_json(s.tail);
    j["estimators"] = nlohmann::json::array();
    for (auto e : s.estimators) j["estimators"].push_back(std::string(to_string(e)));
    j["seed"] = s.seed.root;
    if (s.mixing.kind == MixingSpec::Kind::identity) {
        j["mixing"] = {{"kind", "identity"}};
    } else {
        j["mixing"] = {{"kind", "uniform"}, {"lo", s.mixing.lo}, {"hi", s.mixing.hi}, {"max_condition", s.mixing.max_condition}};
    }
    j["histogram"] = {{"lo", s.histogram.lo}, {"hi", s.histogram.hi}, {"width", s.histogram.width}};
    j["agreement_eps"] = s.agreement_eps;
    if (s.rate) j["rate"] = {{"gamma_max", s.rate->gamma_max}, {"c_exponent", s.rate->c_exponent}};
    return j;
}

inline ScenarioSpec parse_scenario(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenario(body);
}

/// Dependent-data design: ARCH(1) with tail index 5 plus two centered squared fGn series,
/// AMUSE with lag 1, k_n = floor(n^{1/4}).
inline ScenarioSpec dependent_series_scenario() {
    ScenarioSpec s;
    s.name = "paper-sec5";
    s.components = {GeneratorSpec::arch1(0.25, heavy_tail_arch_alpha1(), 1000, "arch1"),
                    GeneratorSpec::squared_fgn(0.75, "d1"), GeneratorSpec::squared_fgn(0.8, "d2")};
    s.unmixer = UnmixerSpec::amuse(1);
    s.sample_sizes = {300, 1000, 10000, 100000};
    s.replications = 200;
    s.tail = TailSpec::power(0.25);
    s.seed.root = 5;
    s.rate = RateInputs{0.2, 0.4};
    return s;
}

/// Independent-data design: Pareto(5), Pareto(15), Pareto(30), FOBI, k_n = floor(n^{1/4}).
inline ScenarioSpec iid_pareto_scenario() {
    ScenarioSpec s;
    s.name = "paper-appB";
    s.components = {GeneratorSpec::pareto(5.0, "pareto5"), GeneratorSpec::pareto(15.0, "pareto15"),
                    GeneratorSpec::pareto(30.0, "pareto30")};
    s.unmixer = UnmixerSpec::fobi();
    s.sample_sizes = {300, 1000, 10000, 100000};
    s.replications = 200;
    s.tail = TailSpec::power(0.25);
    s.seed.root = 2;
    s.rate = RateInputs{0.2, 0.5};
    return s;
}

/// Built-in scenarios by name, or nullopt.
inline std::optional<ScenarioSpec> bundled_scenario(std::string_view name) {
    if (name == "paper-sec5") return dependent_series_scenario();
    if (name == "paper-appB") return iid_pareto_scenario();
    return std::nullopt;
}

}  // namespace latent_evi
