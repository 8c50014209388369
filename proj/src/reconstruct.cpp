#include "calderon/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace calderon {

StationaryPhaseModel stationary_phase_constant(const HoloFunction& phase, const HoloFunction& amplitude, cplx p,
                                               double rho_p) {
    StationaryPhaseModel m;
    const double slope = std::abs(phase.derivative(p));
    m.hess_abs = std::abs(phase.derivative(p, 2));
    if (slope > 1e-8 * std::max(1.0, m.hess_abs)) throw PreconditionError("p is not a critical point of the phase");
    if (m.hess_abs <= 1e-8) throw PreconditionError("degenerate critical point: |Phi''(p)| <= 1e-8");
    m.psi_p = phase(p).imag();
    m.a_p = amplitude(p);
    if (m.psi_p == 0.0) throw PreconditionError("psi(p) = 0: the oscillation factor is constant");
    if (m.a_p == cplx(0.0)) throw PreconditionError("amplitude vanishes at p");
    m.C_p = 2.0 * kPi * std::exp(2.0 * rho_p) / m.hess_abs;
    return m;
}

cplx oscillatory_integral_grid(const HoloFunction& phase, const std::function<double(cplx)>& g, double h,
                               double half_width, int points_per_side) {
    if (points_per_side < 2) throw PreconditionError("grid needs at least two points per side");
    const double step = 2.0 * half_width / (points_per_side - 1);
    cplx sum = 0.0;
    for (int i = 0; i < points_per_side; ++i) {
        const double wx = (i == 0 || i == points_per_side - 1) ? 0.5 : 1.0;
        for (int j = 0; j < points_per_side; ++j) {
            const double wy = (j == 0 || j == points_per_side - 1) ? 0.5 : 1.0;
            const cplx z(-half_width + i * step, -half_width + j * step);
            const double gv = g(z);
            if (gv == 0.0) continue;
            sum += wx * wy * gv * std::exp(2.0 * kI * phase(z).imag() / h);
        }
    }
    return sum * step * step;
}

cplx oscillatory_integral(const Mesh& mesh, const HoloFunction& phase, const RealVec& f, double h) {
    cplx sum = 0.0;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (f[v] != 0.0) sum += mesh.mass[v] * f[v] * std::exp(2.0 * kI * phase(mesh.vertices[v]).imag() / h);
    return sum;
}

StationaryFit fit_stationary_model(const std::vector<double>& h, const std::vector<double>& S, double psi_p) {
    if (h.size() != S.size() || h.size() < 3) throw PreconditionError("stationary-phase fit needs at least three samples");
    StationaryFit fit;
    const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    fit.periods = std::abs(psi_p) * (1.0 / *lo - 1.0 / *hi) / kPi;
    if (fit.periods < 2.0) {
        std::ostringstream msg;
        msg << "ill-conditioned stationary-phase fit: h_list spans " << fit.periods
            << " periods of 2 psi(p)/h, at least 2 are needed";
        throw PreconditionError(msg.str());
    }
    const int n = static_cast<int>(h.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        X(k, 1) = h[k];
        X(k, 2) = h[k] * std::cos(2.0 * psi_p / h[k]);
        y[k] = S[k];
    }
    Eigen::VectorXd scale = X.colwise().norm();
    const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs);
    const auto sv = svd.singularValues();
    if (!(sv[2] > 1e-8 * sv[0])) throw PreconditionError("ill-conditioned stationary-phase fit: columns are dependent over h_list");
    const Eigen::VectorXd coef = Xs.colPivHouseholderQr().solve(y).cwiseQuotient(scale);
    fit.A = coef[0];
    fit.B = coef[1];
    fit.C = coef[2];
    fit.residual = std::sqrt((X * coef - y).squaredNorm() / n);
    return fit;
}

std::vector<double> subsequence_h_list(double psi_p, double h_min, double h_max) {
    std::vector<double> out;
    const double a = 2.0 * std::abs(psi_p) / kPi;
    for (int k = std::max(1, int(std::ceil(a / h_max - 1e-12))); a / k >= h_min * (1.0 - 1e-12); ++k) out.push_back(a / k);
    return out;
}

PotentialPair::PotentialPair(const Mesh& mesh, RealVec v1, RealVec v2) : V1(std::move(v1)), V2(std::move(v2)) {
    system1 = std::make_shared<SchrodingerSystem>(mesh, V1, "V1");
    system2 = std::make_shared<SchrodingerSystem>(mesh, V2, "V2");
}

PointEstimate pointwise_difference(const Mesh& mesh, const PotentialPair& pot, cplx p, const std::vector<double>& h_list,
                                   const ReconstructOptions& options) {
    PointEstimate est;
    est.p = p;
    try {
        const MorsePhase ph = build_morse_phase(mesh.domain, p, options.phase);
        const FitResult a = build_amplitude(ph.report, p, mesh.domain.gamma0, options.vanish_order, options.phase.fit);
        est.model = stationary_phase_constant(ph.phase, a.function, p, mesh.domain.rho(p));
        const CgoSetup s1 = prepare_cgo(mesh, pot.V1, ph.phase, ph.report, p, a.function, options.cgo, pot.system1);
        const CgoSetup s2 = prepare_cgo(mesh, pot.V2, -ph.phase, ph.report, p, a.function, options.cgo, pot.system2);
        std::vector<double> candidates;
        if (options.mode == "subsequence") {
            const auto [lo, hi] = std::minmax_element(h_list.begin(), h_list.end());
            candidates = subsequence_h_list(est.model.psi_p, *lo, *hi);
        } else if (options.mode == "fit") {
            candidates = h_list;
        } else {
            throw ConfigurationError("unknown reconstruction mode '" + options.mode + "'");
        }
        for (double h : candidates) {
            try {
                check_resolvable(s1, h);
                check_resolvable(s2, h);
                est.h.push_back(h);
            } catch (const ResolutionError&) {
                est.h_skipped.push_back(h);
            }
        }
        if (est.h.size() < 3) {
            std::ostringstream msg;
            msg << "mesh cannot resolve the phase at p for enough h: " << est.h.size() << " usable, 3 needed";
            throw ResolutionError(msg.str());
        }
        const RealVec dV = pot.V1 - pot.V2;
        double gap = 0.0, scale = 0.0;
        for (double h : est.h) {
            const CgoSolution u1 = complete_solution(s1, h);
            const CgoSolution u2 = complete_solution(s2, h);
            est.S.push_back(boundary_pairing(mesh, u1.traces, u2.traces).real());
            est.interior.push_back(interior_integral(mesh, RealVec(weighted_product(u1, u2).cwiseProduct(dV))));
            gap = std::max(gap, std::abs(est.S.back() - est.interior.back()));
            scale = std::max(scale, std::abs(est.interior.back()));
        }
        est.green_gap = scale > 0.0 ? gap / scale : gap;
        est.fit = fit_stationary_model(est.h, est.S, est.model.psi_p);
        est.D = est.fit.C / (est.model.C_p * std::norm(est.model.a_p));
    } catch (const Error& e) {
        est.error = e.what();
    }
    return est;
}

int DifferenceMap::argmax() const {
    int best = -1;
    for (int k = 0; k < static_cast<int>(points.size()); ++k)
        if (points[k].ok() && (best < 0 || std::abs(points[k].D) > std::abs(points[best].D))) best = k;
    return best;
}

nlohmann::json DifferenceMap::summary() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& e : points) {
        nlohmann::json j = {{"x", e.p.real()}, {"y", e.p.imag()}, {"ok", e.ok()}};
        if (e.ok())
            j.update({{"D", e.D},
                      {"fit_residual", e.fit.residual},
                      {"abs_a_p", std::abs(e.model.a_p)},
                      {"C_p", e.model.C_p},
                      {"green_gap", e.green_gap},
                      {"h_skipped", e.h_skipped}});
        else
            j["error"] = e.error;
        pts.push_back(j);
    }
    const int k = argmax();
    nlohmann::json out = {{"count", count}, {"spacing", spacing}, {"center", {center.real(), center.imag()}}, {"points", pts}};
    out["argmax"] = k < 0 ? nlohmann::json(nullptr) : nlohmann::json({points[k].p.real(), points[k].p.imag()});
    return out;
}

void DifferenceMap::write_csv(std::ostream& out) const {
    out.precision(17);
    out << "x,y,D,fit_residual,abs_a_p,C_p\n";
    for (const auto& e : points) {
        out << e.p.real() << ',' << e.p.imag() << ',';
        if (e.ok())
            out << e.D << ',' << e.fit.residual << ',' << std::abs(e.model.a_p) << ',' << e.model.C_p << '\n';
        else
            out << "nan,nan,nan,nan\n";
    }
}

DifferenceMap difference_map(const Mesh& mesh, const PotentialPair& pot, cplx center, double spacing, int count,
                             const std::vector<double>& h_list, const ReconstructOptions& options, int jobs) {
    if (count < 1) throw PreconditionError("difference map needs at least one grid point per side");
    DifferenceMap map;
    map.count = count;
    map.spacing = spacing;
    map.center = center;
    std::vector<cplx> grid;
    const double mid = 0.5 * (count - 1);
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < count; ++i) grid.push_back(center + cplx(spacing * (i - mid), spacing * (j - mid)));
    map.points.resize(grid.size());
    auto work = [&](int first, int stride) {
        for (int k = first; k < static_cast<int>(grid.size()); k += stride)
            map.points[k] = pointwise_difference(mesh, pot, grid[k], h_list, options);
    };
    const int threads = std::max(1, std::min<int>(jobs, grid.size()));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& t : pool) t.join();
    }
    return map;
}

// ------------------------------------------------------------------ boundary

CplxVec concentrating_trace(const Mesh& mesh, double theta0, double h, bool conjugate, double width) {
    CplxVec out = CplxVec::Zero(mesh.vertex_count());
    const cplx rot = std::polar(1.0, -theta0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const cplx w = mesh.vertices[v] * rot;
        if (std::abs(w) == 0.0) continue;
        const double x = std::arg(w), y = -std::log(std::abs(w));
        const double t2 = (x * x + y * y) / (h * width * width);
        if (t2 >= 1.0) continue;
        const double eta = std::exp(1.0 - 1.0 / (1.0 - t2));
        const double sx = conjugate ? -x : x;
        out[v] = eta * std::exp(cplx(-y, sx) / h);
    }
    return out;
}

BoundarySeries boundary_pairing_series(const Mesh& mesh, const PotentialPair& pot, double theta0,
                                       const std::vector<double>& h_list, double width) {
    if (h_list.empty()) throw PreconditionError("boundary recovery needs at least one h");
    const double reach = width * std::sqrt(*std::max_element(h_list.begin(), h_list.end()));
    if (mesh.domain.gamma0) {
        for (int k = 0; k <= 64; ++k) {
            const double t = theta0 - reach + 2.0 * reach * k / 64;
            if (mesh.domain.in_gamma0(std::fmod(std::fmod(t, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi)))
                throw PreconditionError("boundary point must lie inside the accessible arc by at least width * sqrt(h_max)");
        }
    }
    BoundarySeries s;
    s.theta0 = theta0;
    const RealVec dV = pot.V1 - pot.V2;
    std::vector<double> mag;
    for (double h : h_list) {
        const CplxVec f1 = boundary_values(mesh, concentrating_trace(mesh, theta0, h, false, width));
        const CplxVec f2 = boundary_values(mesh, concentrating_trace(mesh, theta0, h, true, width));
        const CplxVec u1 = pot.system1->solve(f1);
        const CplxVec u2 = pot.system2->solve(f2);
        const cplx S = boundary_pairing(mesh, pot.system1->traces(u1), pot.system2->traces(u2));
        const cplx I = interior_integral(mesh, CplxVec(u1.cwiseProduct(u2).cwiseProduct(dV.cast<cplx>())));
        s.h.push_back(h);
        s.S.push_back(S);
        s.interior_gap.push_back(std::abs(S - I));
        mag.push_back(std::abs(S));
    }
    if (s.h.size() >= 2) s.exponent = fit_exponent(s.h, mag).exponent;
    return s;
}

ScaledFit fit_scaled_pairing(const BoundarySeries& series) {
    const int n = static_cast<int>(series.h.size());
    if (n < 2) throw PreconditionError("boundary fit needs at least two h values");
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXcd y(n);
    for (int k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        X(k, 1) = series.h[k];
        y[k] = series.S[k] / std::pow(series.h[k], 1.5);
    }
    const auto qr = X.colPivHouseholderQr();
    const Eigen::VectorXd re = qr.solve(Eigen::VectorXd(y.real()));
    const Eigen::VectorXd im = qr.solve(Eigen::VectorXd(y.imag()));
    return {cplx(re[0], im[0]), cplx(re[1], im[1])};
}

BoundaryCalibration calibrate_boundary(const BoundarySeries& series, double known_difference) {
    if (known_difference == 0.0) throw PreconditionError("calibration needs a nonzero boundary difference");
    BoundaryCalibration c;
    c.h = series.h;
    c.C = fit_scaled_pairing(series).intercept / known_difference;
    if (c.C == cplx(0.0)) throw PreconditionError("calibration scenario produced a vanishing pairing");
    return c;
}

BoundaryEstimate boundary_recovery(const Mesh& mesh, const PotentialPair& pot, double theta0,
                                   const std::vector<double>& h_list, const BoundaryCalibration& cal,
                                   double exponent_low, double exponent_high, double width) {
    if (cal.h != h_list) throw PreconditionError("calibration was made for a different h_list");
    BoundaryEstimate est;
    est.theta0 = theta0;
    est.series = boundary_pairing_series(mesh, pot, theta0, h_list, width);
    est.exponent = est.series.exponent;
    est.D = (fit_scaled_pairing(est.series).intercept / cal.C).real();
    bool negligible = true;
    for (const cplx& S : est.series.S)
        if (std::abs(S) > 1e-12) negligible = false;
    if (!negligible && !(est.exponent >= exponent_low && est.exponent <= exponent_high)) {
        std::ostringstream msg;
        msg << "concentration regime not reached: exponent " << est.exponent << " outside [" << exponent_low << ", "
            << exponent_high << "]; use smaller h or a finer mesh";
        throw ResolutionError(msg.str());
    }
    return est;
}

void write_boundary_csv(const std::vector<BoundaryEstimate>& estimates, std::ostream& out) {
    out.precision(17);
    out << "theta,D,fitted_exponent\n";
    for (const auto& e : estimates) out << e.theta0 << ',' << e.D << ',' << e.exponent << '\n';
}

}  // namespace calderon
