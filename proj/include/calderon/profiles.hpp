#pragma once

#include <functional>
#include <string>

#include "calderon/types.hpp"

namespace calderon {

// Named analytic profile used for potentials and conformal factors.
//   zero, constant, gaussian (width = standard deviation), radial_bump (compact,
//   exp(1 - 1/(1 - r^2/width^2))), piecewise (amplitude inside |z - center| < width),
//   radial_quadratic (amplitude * |z - center|^2)
struct Profile {
    std::string kind = "zero";
    double amplitude = 0.0;
    cplx center{0.0, 0.0};
    double width = 1.0;

    double operator()(cplx z) const;
    std::function<double(cplx)> function() const;
};

Profile parse_profile_kind(const std::string& kind);
bool is_known_profile(const std::string& kind);

}  // namespace calderon
