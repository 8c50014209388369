#include "calderon/profiles.hpp"

#include <array>
#include <cmath>

namespace calderon {

namespace {
const std::array<const char*, 6> kKinds{"zero", "constant", "gaussian", "radial_bump", "piecewise", "radial_quadratic"};
}

bool is_known_profile(const std::string& kind) {
    for (const char* k : kKinds)
        if (kind == k) return true;
    return false;
}

Profile parse_profile_kind(const std::string& kind) {
    if (!is_known_profile(kind)) throw ConfigurationError("unknown profile kind '" + kind + "'");
    Profile p;
    p.kind = kind;
    return p;
}

double Profile::operator()(cplx z) const {
    const double r2 = std::norm(z - center);
    if (kind == "zero") return 0.0;
    if (kind == "constant") return amplitude;
    if (kind == "gaussian") return amplitude * std::exp(-r2 / (2.0 * width * width));
    if (kind == "radial_bump") {
        const double t = r2 / (width * width);
        return t < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0;
    }
    if (kind == "piecewise") return r2 < width * width ? amplitude : 0.0;
    if (kind == "radial_quadratic") return amplitude * r2;
    throw ConfigurationError("unknown profile kind '" + kind + "'");
}

std::function<double(cplx)> Profile::function() const {
    Profile copy = *this;
    return [copy](cplx z) { return copy(z); };
}

}  // namespace calderon
