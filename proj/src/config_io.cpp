#include "skflow/config_io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace skflow {

namespace {

using nlohmann::json;

void require_fields(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown field '" + it.key() + "' in " + where);
}

} // namespace

LevySpec read_levy_spec_json(std::istream& is) {
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad JSON: ") + e.what());
    }
    require_fields(j, {"schema", "dim", "drift", "intensity", "jump_law", "truncation",
                       "compensate"},
                   "driver spec");
    if (!j.contains("schema") || j["schema"] != 1)
        throw ConfigError("driver spec needs schema: 1");

    LevySpec spec;
    spec.dim = j.value("dim", 1);
    if (j.contains("drift")) {
        const auto& d = j["drift"];
        if (!d.is_array() || static_cast<Eigen::Index>(d.size()) != spec.dim)
            throw ConfigError("drift must be an array of length dim");
        spec.drift = Eigen::VectorXd(spec.dim);
        for (Eigen::Index i = 0; i < spec.dim; ++i)
            spec.drift(i) = d[static_cast<std::size_t>(i)].get<double>();
    } else {
        spec.drift = Eigen::VectorXd::Zero(spec.dim);
    }
    spec.intensity = j.value("intensity", 0.0);
    spec.truncation = j.value("truncation", 0.0);
    spec.compensate = j.value("compensate", false);

    if (j.contains("jump_law")) {
        const json& law = j["jump_law"];
        const std::string kind = law.value("kind", "");
        if (kind == "fixed") {
            require_fields(law, {"kind", "size"}, "jump_law");
            spec.jump_law = JumpLaw::fixed(law.value("size", 1.0));
        } else if (kind == "normal") {
            require_fields(law, {"kind", "mean", "stddev"}, "jump_law");
            spec.jump_law = JumpLaw::normal(law.value("mean", 0.0), law.value("stddev", 1.0));
        } else if (kind == "uniform") {
            require_fields(law, {"kind", "lo", "hi"}, "jump_law");
            spec.jump_law = JumpLaw::uniform(law.value("lo", -1.0), law.value("hi", 1.0));
        } else {
            throw ConfigError("jump_law.kind must be fixed, normal, or uniform");
        }
    }
    spec.validate();
    return spec;
}

LevySpec read_levy_spec_json_file(const std::string& filename) {
    std::ifstream f(filename);
    if (!f)
        throw ConfigError("cannot open spec file: " + filename);
    return read_levy_spec_json(f);
}

std::string levy_spec_to_json(const LevySpec& spec) {
    json j;
    j["schema"] = 1;
    j["dim"] = spec.dim;
    j["drift"] = std::vector<double>(spec.drift.data(), spec.drift.data() + spec.drift.size());
    j["intensity"] = spec.intensity;
    switch (spec.jump_law.kind()) {
    case JumpLaw::Kind::fixed:
        j["jump_law"] = {{"kind", "fixed"}, {"size", spec.jump_law.param(0)}};
        break;
    case JumpLaw::Kind::normal:
        j["jump_law"] = {{"kind", "normal"},
                         {"mean", spec.jump_law.param(0)},
                         {"stddev", spec.jump_law.param(1)}};
        break;
    case JumpLaw::Kind::uniform:
        j["jump_law"] = {{"kind", "uniform"},
                         {"lo", spec.jump_law.param(0)},
                         {"hi", spec.jump_law.param(1)}};
        break;
    }
    j["truncation"] = spec.truncation;
    j["compensate"] = spec.compensate;
    return j.dump(2);
}

} // namespace skflow
