#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calderon/forward.hpp"
#include "calderon/holo.hpp"

namespace calderon {

// Radial cutoffs around the critical point p; d is the distance to the nearest other
// critical point or to the boundary. chi1 = exp(1 - 1/(1 - t^2)) with t = |z - p| / (d/4);
// chi = 1 on |z - p| <= d/4, 0 beyond d/2.
struct Cutoffs {
    cplx center;
    double d = 0.0;

    double chi1(cplx z) const;
    double chi(cplx z) const;
    cplx dz_chi(cplx z) const;
    cplx dzbar_chi1(cplx z) const;
    double laplacian_chi(cplx z) const;  // Euclidean
};

Cutoffs make_cutoffs(const CriticalPointReport& report, cplx p);

struct CgoOptions {
    FitOptions fit;
    int vanish_order = 4;
    double jet_radius_factor = 4.0;
    double resolvability_factor = 4.0;
    double a0_tolerance = 1e-4;
    double r12_bound = 10.0;
    std::string remainder_mode = "min_norm";  // or "dirichlet"
};

// Solves for the Dirichlet Green potential of a V and its z-derivative on the mesh.
struct ThetaField {
    CplxVec green;  // G(aV)
    CplxVec theta;  // d_z G(aV)
};

ThetaField theta_field(const Mesh& mesh, const JetOperator& jets, const RealVec& V, const CplxVec& a_values);

// b = d_z G(aV) - omega, sampled at the vertices
CplxVec assemble_b(const Mesh& mesh, const RealVec& V, const HoloFunction& a, const HoloFunction& omega);

// h-independent part of a CGO solution with phase Phi and amplitude a.
struct CgoSetup {
    const Mesh* mesh = nullptr;
    RealVec V;
    HoloFunction phase;
    HoloFunction amplitude;
    HoloFunction a0;
    HoloFunction jet_form;  // f with omega = f'
    CriticalPointReport report;
    cplx p;
    Cutoffs cutoffs;
    CgoOptions options;

    CplxVec phase_values, dphase, a_values, a0_values;
    RealVec phi, psi, chi, chi1;
    CplxVec theta, omega, b, dbar_b;
    CplxVec r12, r12_tilde, lap_r12;  // lap_r12 = -4 d dbar r12
    double max_dpsi_support = 0.0;    // max |d_z psi| over supp chi
    double a0_residual = 0.0;
    double jet_residual = 0.0;

    std::shared_ptr<const SchrodingerSystem> system;
    std::shared_ptr<const PointLocator> locator;
};

std::pair<CplxVec, CplxVec> build_r12(const Mesh& mesh, const CplxVec& b, const CplxVec& dphase, const RealVec& chi1,
                                      const CriticalPointReport& report, double bound);

HoloFunction build_a0(const Mesh& mesh, const CplxVec& r12_tilde, const std::optional<ArcSpec>& gamma0,
                      const FitOptions& options, double tolerance, double* residual = nullptr);

CgoSetup prepare_cgo(const Mesh& mesh, const RealVec& V, const HoloFunction& phase, const CriticalPointReport& report,
                     cplx p, const HoloFunction& amplitude, const CgoOptions& options,
                     std::shared_ptr<const SchrodingerSystem> system = nullptr);

// Same setup with phase -Phi and the same amplitude (the mirror solution).
CgoSetup prepare_mirror(const CgoSetup& setup);

struct R11Result {
    CplxVec r11;
    CplxVec eta;
    CplxVec dbar_eta;
};

// throws ResolutionError when h < factor * resolution * max|d_z psi| on supp chi
void check_resolvable(const CgoSetup& setup, double h);
R11Result build_r11(const CgoSetup& setup, double h);

// u = e^{phi/h} W with W = w0 + r2 and w0 = 2 Re(e^{i psi/h}(a + h a0 + r1)).
struct CgoSolution {
    double h = 0.0;
    R11Result r11;
    CplxVec r1;
    CplxVec residual;  // e^{-Phi/h}(Delta + V) e^{Phi/h}(a + r1)
    RealVec w0;
    RealVec r2;
    RealVec W;
    BoundaryTraces traces;  // log_scale = phi/h on the boundary
    double gamma0_max = 0.0;
};

CgoSolution complete_solution(const CgoSetup& setup, double h);

// pointwise u1 u2 e^{-(phi1 + phi2)/h} for two solutions on the same mesh
RealVec weighted_product(const CgoSolution& u1, const CgoSolution& u2);

double l2_norm(const Mesh& mesh, const CplxVec& f);
double l2_norm(const Mesh& mesh, const RealVec& f);
double h1_seminorm(const Mesh& mesh, const CplxVec& f);

struct SlopeFit {
    double exponent = 0.0;
    double stderr_ = 0.0;
    bool exact_zero = false;
};

// least-squares slope of log(value / |log h|^log_power) against log h
SlopeFit fit_exponent(const std::vector<double>& h, const std::vector<double>& values, int log_power = 0);

struct ScalingRow {
    double h;
    std::string norm;
    double value;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    std::vector<std::pair<std::string, SlopeFit>> fits;
    nlohmann::json summary() const;
    void write_csv(std::ostream& out) const;
};

ScalingReport residual_scaling_report(const CgoSetup& setup, const std::vector<double>& h_list);

}  // namespace calderon
