#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "calderon/cgo.hpp"

namespace calderon {

// Leading stationary-phase term of 2 Re integral e^{2i psi/h} g dv_g at a holomorphic Morse
// critical point: h C_p g(p) Re(e^{2i psi(p)/h}).
struct StationaryPhaseModel {
    double C_p = 0.0;
    double psi_p = 0.0;
    cplx a_p;
    double hess_abs = 0.0;
};

StationaryPhaseModel stationary_phase_constant(const HoloFunction& phase, const HoloFunction& amplitude, cplx p,
                                               double rho_p = 0.0);

// integral of e^{2i psi/h} g dA over [-half_width, half_width]^2 by the tensor trapezoid rule
cplx oscillatory_integral_grid(const HoloFunction& phase, const std::function<double(cplx)>& g, double h,
                               double half_width, int points_per_side);

// integral of e^{2i psi/h} f dv_g with the mesh quadrature
cplx oscillatory_integral(const Mesh& mesh, const HoloFunction& phase, const RealVec& f, double h);

// S(h) = A + B h + C h cos(2 psi_p / h)
struct StationaryFit {
    double A = 0.0, B = 0.0, C = 0.0;
    double residual = 0.0;  // rms misfit
    double periods = 0.0;   // oscillation periods of 2 psi_p / h spanned by the samples
};

StationaryFit fit_stationary_model(const std::vector<double>& h, const std::vector<double>& S, double psi_p);

// resonant h in [h_min, h_max] with cos(2 psi_p / h) = +1 or -1
std::vector<double> subsequence_h_list(double psi_p, double h_min, double h_max);

struct ReconstructOptions {
    PhaseOptions phase;
    CgoOptions cgo;
    int vanish_order = 4;
    std::string mode = "fit";  // or "subsequence"
};

struct PointEstimate {
    cplx p;
    double D = 0.0;
    StationaryFit fit;
    StationaryPhaseModel model;
    std::vector<double> h;          // values used in the fit
    std::vector<double> h_skipped;  // below the resolvability threshold at p
    std::vector<double> S;
    std::vector<double> interior;  // interior integral for each h
    double green_gap = 0.0;        // max |S - interior| / max |interior|
    std::string error;
    bool ok() const { return error.empty(); }
};

// Potentials are given with their factorised systems so that several points can share them.
struct PotentialPair {
    RealVec V1, V2;
    std::shared_ptr<const SchrodingerSystem> system1, system2;
    PotentialPair(const Mesh& mesh, RealVec v1, RealVec v2);
};

// h values the mesh cannot resolve at p are dropped before the fit
PointEstimate pointwise_difference(const Mesh& mesh, const PotentialPair& potentials, cplx p,
                                   const std::vector<double>& h_list, const ReconstructOptions& options);

struct DifferenceMap {
    std::vector<PointEstimate> points;  // row-major from the lowest y
    int count = 0;
    double spacing = 0.0;
    cplx center;

    int argmax() const;  // index of max |D| among successful points, -1 when none
    nlohmann::json summary() const;
    void write_csv(std::ostream& out) const;
};

DifferenceMap difference_map(const Mesh& mesh, const PotentialPair& potentials, cplx center, double spacing, int count,
                             const std::vector<double>& h_list, const ReconstructOptions& options, int jobs = 1);

// v_h = eta(Z / sqrt h) e^{i zeta / h} (or its conjugate exponent) in the boundary chart
// zeta = x + i y = -i log(z e^{-i theta0}); eta(X) = exp(1 - 1/(1 - |X|^2 / width^2)).
CplxVec concentrating_trace(const Mesh& mesh, double theta0, double h, bool conjugate, double width = 1.0);

struct BoundarySeries {
    double theta0 = 0.0;
    std::vector<double> h;
    std::vector<cplx> S;
    std::vector<double> interior_gap;  // |S - interior integral| per h
    double exponent = 0.0;             // slope of log |S| against log h
};

BoundarySeries boundary_pairing_series(const Mesh& mesh, const PotentialPair& potentials, double theta0,
                                       const std::vector<double>& h_list, double width = 1.0);

// S(h) / h^{3/2} = C D + e h; the cutoff is even along the boundary, so the first
// correction to the leading term is of relative order h.
struct ScaledFit {
    cplx intercept, slope;
};

ScaledFit fit_scaled_pairing(const BoundarySeries& series);

// C from a scenario with known boundary difference (V1 - V2)(p)
struct BoundaryCalibration {
    std::vector<double> h;
    cplx C;
};

BoundaryCalibration calibrate_boundary(const BoundarySeries& series, double known_difference);

struct BoundaryEstimate {
    double theta0 = 0.0;
    double D = 0.0;
    double exponent = 0.0;
    BoundarySeries series;
};

// throws ResolutionError when the exponent leaves [exponent_low, exponent_high]
BoundaryEstimate boundary_recovery(const Mesh& mesh, const PotentialPair& potentials, double theta0,
                                   const std::vector<double>& h_list, const BoundaryCalibration& calibration,
                                   double exponent_low = 1.35, double exponent_high = 1.65, double width = 1.0);

void write_boundary_csv(const std::vector<BoundaryEstimate>& estimates, std::ostream& out);

}  // namespace calderon
