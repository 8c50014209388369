#include "calderon/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "calderon/schema_text.hpp"

namespace calderon {

using nlohmann::json;

const json& scenario_schema() {
    static const json s = json::parse(kScenarioSchemaText);
    return s;
}

const json& summary_schema() {
    static const json s = json::parse(kSummarySchemaText);
    return s;
}

namespace {

class Validator {
public:
    explicit Validator(const json& root) : root_(root) {}

    void run(json& value, const json& schema, const std::string& where) {
        const json& s = resolve(schema);
        if (s.contains("oneOf")) {
            for (const json& option : s["oneOf"]) {
                json trial = value;
                Validator sub(root_);
                sub.run(trial, option, where);
                if (sub.errors.empty()) {
                    value = std::move(trial);
                    return;
                }
            }
            fail(where, "does not match any allowed form");
            return;
        }
        if (s.contains("enum")) {
            bool found = false;
            for (const json& e : s["enum"]) found = found || e == value;
            if (!found) {
                fail(where, "value " + value.dump() + " is not one of " + s["enum"].dump());
                return;
            }
        }
        if (s.contains("type") && !type_matches(value, s["type"])) {
            fail(where, "expected " + s["type"].dump() + ", got " + std::string(value.type_name()));
            return;
        }
        if (value.is_number()) {
            const double x = value.get<double>();
            if (s.contains("minimum") && x < s["minimum"].get<double>())
                fail(where, "must be >= " + s["minimum"].dump());
            if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
                fail(where, "must be > " + s["exclusiveMinimum"].dump());
        }
        if (value.is_array()) {
            if (s.contains("minItems") && value.size() < s["minItems"].get<std::size_t>())
                fail(where, "needs at least " + s["minItems"].dump() + " items");
            if (s.contains("maxItems") && value.size() > s["maxItems"].get<std::size_t>())
                fail(where, "allows at most " + s["maxItems"].dump() + " items");
            if (s.contains("items"))
                for (std::size_t k = 0; k < value.size(); ++k)
                    run(value[k], s["items"], where + "/" + std::to_string(k));
        }
        if (value.is_object()) {
            const json empty = json::object();
            const json& props = s.contains("properties") ? s["properties"] : empty;
            if (s.value("additionalProperties", true) == false)
                for (auto it = value.begin(); it != value.end(); ++it)
                    if (!props.contains(it.key())) fail(where, "unknown key '" + it.key() + "'");
            if (s.contains("required"))
                for (const json& r : s["required"])
                    if (!value.contains(r.get<std::string>()))
                        fail(where, "missing required key '" + r.get<std::string>() + "'");
            for (auto it = props.begin(); it != props.end(); ++it) {
                if (!value.contains(it.key())) {
                    const json* def = default_of(it.value());
                    if (!def) continue;
                    value[it.key()] = *def;
                }
                run(value[it.key()], it.value(), where + "/" + it.key());
            }
        }
    }

    std::vector<std::string> errors;

private:
    const json& resolve(const json& schema) const {
        if (!schema.contains("$ref")) return schema;
        const std::string ref = schema["$ref"];
        if (ref.rfind("#/", 0) != 0) throw ConfigurationError("unsupported schema reference '" + ref + "'");
        return resolve(root_.at(json::json_pointer(ref.substr(1))));
    }

    const json* default_of(const json& schema) const {
        if (schema.contains("default")) return &schema["default"];
        const json& r = resolve(schema);
        return r.contains("default") ? &r["default"] : nullptr;
    }

    static bool type_matches(const json& v, const json& type) {
        if (type.is_array()) {
            for (const json& t : type)
                if (type_matches(v, t)) return true;
            return false;
        }
        const std::string t = type;
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
        if (t == "number") return v.is_number();
        return false;
    }

    void fail(const std::string& where, const std::string& what) {
        errors.push_back((where.empty() ? std::string("/") : where) + ": " + what);
    }

    const json& root_;
};

cplx point(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

Profile profile(const json& j) {
    Profile p = parse_profile_kind(j.at("kind").get<std::string>());
    p.amplitude = j.value("amplitude", 1.0);
    p.center = j.contains("center") ? point(j["center"]) : cplx(0.0);
    p.width = j.value("width", 1.0);
    return p;
}

PotentialSpec potential(const json& j, const std::string& where) {
    PotentialSpec s;
    if (j.contains("conductivity")) {
        if (j.contains("kind")) throw ConfigurationError(where + ": give either 'kind' or 'conductivity', not both");
        s.conductivity = profile(j["conductivity"]);
        if (s.conductivity->kind == "piecewise")
            throw ConfigurationError(where + ": a conductivity must be smooth, 'piecewise' is not allowed");
        s.profile.kind = "conductivity";
        return s;
    }
    if (!j.contains("kind")) throw ConfigurationError(where + ": missing required key 'kind'");
    s.profile = profile(j);
    return s;
}

json profile_json(const Profile& p) {
    return {{"kind", p.kind}, {"amplitude", p.amplitude}, {"center", {p.center.real(), p.center.imag()}}, {"width", p.width}};
}

}  // namespace

std::vector<std::string> validate_and_fill(json& value, const json& schema) {
    Validator v(schema);
    v.run(value, schema, "");
    return v.errors;
}

double PotentialSpec::operator()(cplx z, const std::function<double(cplx)>& rho) const {
    if (!conductivity) return profile(z);
    const Profile& g = *conductivity;
    auto s = [&](cplx w) {
        const double gamma = 1.0 + g(w);
        if (!(gamma > 0.0)) throw ConfigurationError("conductivity 1 + profile must stay positive");
        return std::sqrt(gamma);
    };
    const double d = 1e-3;
    const double lap = (s(z + d) + s(z - d) + s(z + kI * d) + s(z - kI * d) - 4.0 * s(z)) / (d * d);
    return std::exp(-2.0 * rho(z)) * lap / s(z);
}

RealVec PotentialSpec::sample(const Mesh& mesh) const {
    const auto rho = mesh.domain.rho;
    return sample_real(mesh, [&](cplx z) { return (*this)(z, rho); });
}

json PotentialSpec::to_json() const {
    if (conductivity) return {{"conductivity", profile_json(*conductivity)}};
    return profile_json(profile);
}

DiskDomain Scenario::domain() const {
    DiskDomain d;
    d.rho = rho.function();
    d.gamma0 = gamma0;
    return d;
}

Scenario parse_scenario(json config) {
    if (!config.is_object()) throw ConfigurationError("scenario config must be a JSON object");
    const auto errors = validate_and_fill(config, scenario_schema());
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "invalid scenario config:";
        for (const auto& e : errors) msg << "\n  " << e;
        throw ConfigurationError(msg.str());
    }
    Scenario s;
    s.config = config;
    s.name = config["name"];
    s.seed = config["seed"].get<std::uint64_t>();
    s.resolution = config["resolution"];
    s.h_list = config["h_list"].get<std::vector<double>>();
    s.degree = config["degree"];
    s.vanish_order = config["vanish_order"];
    s.epsilon = config["epsilon"];
    s.rho = profile(config["domain"]["rho"]);
    if (!config["domain"]["gamma0"].is_null()) {
        const auto g = config["domain"]["gamma0"].get<std::vector<double>>();
        if (!(g[1] > g[0])) throw ConfigurationError("/domain/gamma0: end angle must exceed start angle");
        s.gamma0 = ArcSpec{g[0], g[1], false};
    }
    s.V1 = potential(config["potentials"]["V1"], "/potentials/V1");
    s.V2 = potential(config["potentials"]["V2"], "/potentials/V2");

    const json& f = config["forward"];
    s.forward.levels = f["levels"].get<std::vector<double>>();
    s.forward.modes = f["modes"];

    const json& c = config["cgo"];
    s.cgo.point = point(c["point"]);
    s.cgo.remainder_mode = c["remainder_mode"];

    const json& k = config["carleman"];
    s.carleman.phase = k["phase"];
    s.carleman.potential = k["potential"];
    s.carleman.samples = k["samples"];
    if (!k["golden_c_star"].is_null()) s.carleman.golden_c_star = k["golden_c_star"].get<double>();
    s.carleman.golden_tolerance = k["golden_tolerance"];

    const json& r = config["reconstruct"];
    s.reconstruct.point = point(r["point"]);
    s.reconstruct.center = point(r["center"]);
    s.reconstruct.spacing = r["spacing"];
    s.reconstruct.count = r["count"];
    s.reconstruct.mode = r["mode"];
    s.reconstruct.control = r["control"];

    const json& b = config["boundary"];
    s.boundary.theta = b["theta"].get<std::vector<double>>();
    s.boundary.width = b["width"];
    if (!b["potentials"].is_null())
        s.boundary.potentials = std::make_pair(potential(b["potentials"]["V1"], "/boundary/potentials/V1"),
                                               potential(b["potentials"]["V2"], "/boundary/potentials/V2"));
    s.boundary.calibration_potential = profile(b["calibration"]["potential"]);
    s.boundary.calibration_theta = b["calibration"]["theta"];
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot read config '" + path.string() + "'");
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(std::move(config));
}

}  // namespace calderon
