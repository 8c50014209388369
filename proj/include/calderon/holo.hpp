#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "calderon/geometry.hpp"

namespace calderon {

// Polynomial sum_k c_k z^k.
class HoloFunction {
public:
    HoloFunction() : coeffs_{0.0} {}
    explicit HoloFunction(std::vector<cplx> coeffs);
    static HoloFunction constant(cplx c) { return HoloFunction({c}); }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<cplx>& coefficients() const { return coeffs_; }

    cplx operator()(cplx z) const;
    cplx derivative(cplx z, int order = 1) const;
    HoloFunction derivative_function(int order = 1) const;
    bool is_constant() const;

    HoloFunction operator-() const;
    HoloFunction operator+(const HoloFunction& other) const;
    HoloFunction operator*(cplx s) const;

    nlohmann::json to_json() const;
    static HoloFunction from_json(const nlohmann::json& j);

private:
    std::vector<cplx> coeffs_;
};

// R f(z) = (1/pi) integral f(xi) / (conj(z) - conj(xi)) dA(xi), so d_z R f = f.
// f is the P1 interpolant of nodal values, optionally multiplied by a modulation
// evaluated exactly at quadrature points away from z.
class CauchyTransform {
public:
    CauchyTransform(const Mesh& mesh, const CplxVec& values, std::function<cplx(cplx)> modulation = {});

    cplx operator()(cplx z) const;
    CplxVec evaluate(const std::vector<cplx>& points) const;
    int active_cells() const { return static_cast<int>(cells_.size()); }

private:
    struct Cell {
        std::array<cplx, 3> corner;
        cplx centroid;
        double diameter;
        cplx alpha, beta, gamma;  // nodal product = alpha + beta xi + gamma conj(xi)
        std::array<std::pair<cplx, cplx>, 7> fine;
        std::array<std::pair<cplx, cplx>, 3> coarse;
    };
    std::vector<Cell> cells_;
};

CplxVec cauchy_transform(const Mesh& mesh, const CplxVec& f, const std::vector<cplx>& points);

// f^{(order)}(z) = value
struct PointConstraint {
    cplx z;
    int order = 0;
    cplx value;
};

enum class ArcPart { Real, Imag };

// part(f(e^{i theta})) = target on the arc; without explicit samples the target is 0
// on generated collocation nodes.
struct ArcCondition {
    ArcSpec arc;
    ArcPart part = ArcPart::Imag;
    std::vector<double> theta;
    std::vector<double> target;
};

struct FitOptions {
    int degree = 16;
    int nodes_per_degree = 8;
    int verify_factor = 4;
    double regularization = 1e-15;
    double arc_tolerance = 1e-6;
    double hard_tolerance = 1e-10;
    // multiplicative perturbation of collocation weights, drawn from a seeded generator
    double weight_jitter = 0.0;
    std::uint64_t seed = 0;
};

struct FitResult {
    HoloFunction function;
    double arc_residual = 0.0;
    double constraint_residual = 0.0;
};

struct FitVerification {
    double arc_residual = 0.0;
    double constraint_residual = 0.0;
};

FitVerification verify_fit(const HoloFunction& f, const std::vector<PointConstraint>& constraints,
                           const std::optional<ArcCondition>& arc, const FitOptions& options);

// Minimises the arc residual plus a small coefficient penalty subject to the exact point
// constraints; throws InfeasibleFit when verification exceeds the tolerances.
FitResult fit_holomorphic_on_arc(const std::vector<PointConstraint>& constraints,
                                 const std::optional<ArcCondition>& arc, const FitOptions& options);

struct CriticalPoint {
    cplx z;
    double hessian_abs = 0.0;
    int multiplicity = 1;
    bool boundary = false;
    bool degenerate = false;
};

struct CriticalPointReport {
    std::vector<CriticalPoint> points;
    int count_check = 0;

    int located_count() const;
    bool morse() const;
    nlohmann::json to_json() const;
};

CriticalPointReport find_critical_points(const HoloFunction& phase);

struct PhaseOptions {
    FitOptions fit;
    double margin = 0.02;
    int max_retries = 8;
    double retry_jitter = 0.2;
};

// Phi(p) = i, Phi'(p) = 0, Im Phi = 0 on gamma0, Morse on the closed disk.
struct MorsePhase {
    HoloFunction phase;
    CriticalPointReport report;
    double arc_residual = 0.0;
    int retries = 0;
};

MorsePhase build_morse_phase(const DiskDomain& domain, cplx p, const PhaseOptions& options);

// a(p) = 1, Re a = 0 on gamma0, a^{(l)}(q) = 0 for l < N at the other critical points.
FitResult build_amplitude(const CriticalPointReport& report, cplx p, const std::optional<ArcSpec>& gamma0,
                          int vanish_order, const FitOptions& options);

// z-derivatives theta, d_z theta, ... at a point, to be matched by omega = f'.
struct JetTarget {
    cplx z;
    std::vector<cplx> jets;
};

// f with Im f = 0 on gamma0 and f^{(l+1)}(z_j) = jets_j[l].
FitResult build_jet_form(const std::vector<JetTarget>& targets, const std::optional<ArcSpec>& gamma0,
                         const FitOptions& options);

// Holomorphic z-jets of a mesh field by Cauchy integrals on a circle around center.
std::vector<cplx> extract_jets(const PointLocator& locator, const CplxVec& field, cplx center, double radius,
                               int orders, int samples = 64);

}  // namespace calderon
