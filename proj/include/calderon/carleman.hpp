#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include <json.hpp>

#include "calderon/holo.hpp"

namespace calderon {

// phi = Re(phase) with auxiliaries phi_j = Im(F_j), one per critical point p_j, chosen with
// d phi_j(p_j) != 0 and d_nu phi_j = 0 on gamma0.
struct CarlemanWeight {
    HoloFunction phase;
    std::vector<HoloFunction> auxiliaries;
    double epsilon = 0.1;
    double min_gradient_sum = 0.0;   // min over the mesh of sum_j |d phi_j|^2, j = 0..N
    double neumann_residual = 0.0;   // max |d_nu phi_j| over gamma0

    double phi(cplx z) const { return phase(z).real(); }
    cplx grad_phi(cplx z) const;  // phi_x + i phi_y
};

CarlemanWeight build_carleman_weight(const Mesh& mesh, const HoloFunction& phase, double epsilon,
                                     const FitOptions& options);

// phi - (h / 2 eps) sum_j phi_j^2; requires h <= eps / 5
RealVec convexify_weight(const Mesh& mesh, const CarlemanWeight& weight, double h);

// Real test function with closed-form gradient and Euclidean Laplacian.
struct TestFunction {
    struct Value {
        double u = 0.0;
        double ux = 0.0, uy = 0.0;
        double lap = 0.0;
    };
    std::function<Value(cplx)> eval;
    std::string label;

    // cos(pi r / 2): vanishes on the circle
    static TestFunction sine_bump();
    // (1 - |z|^2) exp(-|z - c|^2 / (2 s^2)) cos(k . (x, y) + offset)
    static TestFunction modulated_bump(cplx center, double width, cplx wave, double offset);
    static TestFunction random(std::mt19937_64& rng);
    TestFunction scaled(double factor) const;
};

struct CarlemanValue {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

CarlemanValue carleman_ratio(const Mesh& mesh, const CarlemanWeight& weight, const RealVec& V, const TestFunction& u,
                             double h);

struct CarlemanRow {
    double h;
    int sample;
    CarlemanValue value;
};

struct CarlemanReport {
    std::vector<CarlemanRow> rows;
    std::vector<double> h_used;
    std::vector<double> h_skipped;
    std::vector<double> min_ratio;  // per used h
    double c_star = 0.0;
    double trend = 0.0;             // slope of log(min ratio) against log h
    double trend_stderr = 0.0;
    bool degrading = false;         // min ratio falls significantly as h decreases
    double potential_sup = 0.0;
    bool pass = false;

    nlohmann::json summary() const;
    void write_csv(std::ostream& out) const;
};

// h below factor * resolution * max|d_z phi| is skipped
CarlemanReport carleman_sweep(const Mesh& mesh, const CarlemanWeight& weight, const RealVec& V,
                              const std::vector<double>& h_list, int sample_count, std::uint64_t seed,
                              double resolvability_factor = 4.0, int jobs = 1);

}  // namespace calderon
