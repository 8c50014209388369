#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "calderon/geometry.hpp"
#include "calderon/profiles.hpp"

namespace calderon {

const nlohmann::json& scenario_schema();
const nlohmann::json& summary_schema();

// Validates against the subset of JSON Schema used by the published schemas
// (type, enum, properties, additionalProperties, required, items, min/maxItems,
// minimum, exclusiveMinimum, oneOf, local $ref) and inserts defaults for absent
// properties. Returns one message per violation, each naming its location.
std::vector<std::string> validate_and_fill(nlohmann::json& value, const nlohmann::json& schema);

// A named profile, or the potential of a conductivity gamma = 1 + profile:
// V = Laplacian(gamma^{1/2}) / gamma^{1/2}, divided by the conformal factor.
struct PotentialSpec {
    Profile profile;
    std::optional<Profile> conductivity;

    double operator()(cplx z, const std::function<double(cplx)>& rho) const;
    RealVec sample(const Mesh& mesh) const;
    nlohmann::json to_json() const;
};

struct Scenario {
    nlohmann::json config;  // with every default filled in

    std::string name;
    std::uint64_t seed = 0;
    double resolution = 0.0;
    std::vector<double> h_list;
    int degree = 0;
    int vanish_order = 0;
    double epsilon = 0.0;
    Profile rho;
    std::optional<ArcSpec> gamma0;
    PotentialSpec V1, V2;

    struct {
        std::vector<double> levels;
        int modes = 0;
    } forward;
    struct {
        cplx point;
        std::string remainder_mode;
    } cgo;
    struct {
        std::string phase;
        std::string potential;
        int samples = 0;
        std::optional<double> golden_c_star;
        double golden_tolerance = 0.0;
    } carleman;
    struct {
        cplx point;
        cplx center;
        double spacing = 0.0;
        int count = 0;
        std::string mode;
        bool control = true;
    } reconstruct;
    struct {
        std::vector<double> theta;
        double width = 0.0;
        std::optional<std::pair<PotentialSpec, PotentialSpec>> potentials;
        Profile calibration_potential;
        double calibration_theta = 0.0;
    } boundary;

    DiskDomain domain() const;
};

// throws ConfigurationError listing every offending key
Scenario parse_scenario(nlohmann::json config);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace calderon
