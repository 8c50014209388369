#include "calderon/cgo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/SparseLU>

namespace calderon {

// ------------------------------------------------------------------- cutoffs

namespace {

struct StepJet {
    double value, d1, d2;
};

double bump_exp(double x) { return x < 1e-3 ? 0.0 : std::exp(-1.0 / x); }
double bump_exp_d1(double x) { return x < 1e-3 ? 0.0 : std::exp(-1.0 / x) / (x * x); }
double bump_exp_d2(double x) { return x < 1e-3 ? 0.0 : std::exp(-1.0 / x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x)); }

// smooth step from 1 (t <= 0) to 0 (t >= 1) with derivatives in t
StepJet smooth_step(double t) {
    if (t <= 0.0) return {1.0, 0.0, 0.0};
    if (t >= 1.0) return {0.0, 0.0, 0.0};
    const double n = bump_exp(1.0 - t), n1 = -bump_exp_d1(1.0 - t), n2 = bump_exp_d2(1.0 - t);
    const double m = bump_exp(t), m1 = bump_exp_d1(t), m2 = bump_exp_d2(t);
    const double d = n + m, d1 = n1 + m1, d2 = n2 + m2;
    const double s = n / d;
    const double s1 = (n1 * d - n * d1) / (d * d);
    const double s2 = (n2 * d - n * d2) / (d * d) - 2.0 * d1 / d * s1;
    return {s, s1, s2};
}

StepJet radial_step(double r, double r0, double r1) {
    const double w = r1 - r0;
    const StepJet s = smooth_step((r - r0) / w);
    return {s.value, s.d1 / w, s.d2 / (w * w)};
}

}  // namespace

namespace {

// exp(1 - 1/(1 - t^2)) on r < R with its first r-derivative
std::pair<double, double> radial_bump(double r, double R) {
    const double t = r / R;
    if (t >= 1.0) return {0.0, 0.0};
    const double q = 1.0 - t * t;
    const double v = std::exp(1.0 - 1.0 / q);
    return {v, v * (-2.0 * t / (q * q)) / R};
}

}  // namespace

double Cutoffs::chi1(cplx z) const { return radial_bump(std::abs(z - center), 0.25 * d).first; }
double Cutoffs::chi(cplx z) const { return radial_step(std::abs(z - center), 0.25 * d, 0.5 * d).value; }

cplx Cutoffs::dz_chi(cplx z) const {
    const double r = std::abs(z - center);
    if (r == 0.0) return 0.0;
    return radial_step(r, 0.25 * d, 0.5 * d).d1 * std::conj(z - center) / (2.0 * r);
}

cplx Cutoffs::dzbar_chi1(cplx z) const {
    const double r = std::abs(z - center);
    if (r == 0.0) return 0.0;
    return radial_bump(r, 0.25 * d).second * (z - center) / (2.0 * r);
}

double Cutoffs::laplacian_chi(cplx z) const {
    const double r = std::abs(z - center);
    const StepJet s = radial_step(r, 0.25 * d, 0.5 * d);
    if (r == 0.0) return 0.0;
    return s.d2 + s.d1 / r;
}

Cutoffs make_cutoffs(const CriticalPointReport& report, cplx p) {
    Cutoffs c;
    c.center = p;
    c.d = 1.0 - std::abs(p);
    for (const auto& cp : report.points) {
        const double dist = std::abs(cp.z - p);
        if (dist > 1e-8) c.d = std::min(c.d, dist);
    }
    if (!(c.d > 0.0)) throw PreconditionError("critical point has no neighbourhood free of other critical points");
    return c;
}

// ------------------------------------------------------------ theta, b, r12

ThetaField theta_field(const Mesh& mesh, const JetOperator& jets, const RealVec& V, const CplxVec& a_values) {
    ThetaField out;
    const CplxVec source = a_values.cwiseProduct(V.cast<cplx>());
    out.green = green_apply(mesh, RealVec::Zero(mesh.vertex_count()), source);
    const std::vector<Jet> j = jets.all(out.green);
    out.theta.resize(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) out.theta[v] = j[v].dz();
    return out;
}

CplxVec assemble_b(const Mesh& mesh, const RealVec& V, const HoloFunction& a, const HoloFunction& omega) {
    JetOperator jets(mesh);
    const CplxVec a_values = sample(mesh, [&](cplx z) { return a(z); });
    CplxVec b = theta_field(mesh, jets, V, a_values).theta;
    for (int v = 0; v < mesh.vertex_count(); ++v) b[v] -= omega(mesh.vertices[v]);
    return b;
}

namespace {

// replace values at vertices closer than radius to any listed point by the mean over
// neighbours outside that radius
void average_near(const Mesh& mesh, CplxVec& field, const std::vector<cplx>& points, double radius) {
    std::vector<char> near(mesh.vertex_count(), 0);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        for (cplx q : points)
            if (std::abs(mesh.vertices[v] - q) < radius) near[v] = 1;
    const CplxVec copy = field;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (!near[v]) continue;
        cplx s = 0.0;
        int n = 0;
        for (int w : mesh.neighbors[v])
            if (!near[w]) {
                s += copy[w];
                ++n;
            }
        field[v] = n > 0 ? s / double(n) : 0.0;
    }
}

std::vector<cplx> critical_locations(const CriticalPointReport& report) {
    std::vector<cplx> out;
    for (const auto& cp : report.points) out.push_back(cp.z);
    return out;
}

}  // namespace

std::pair<CplxVec, CplxVec> build_r12(const Mesh& mesh, const CplxVec& b, const CplxVec& dphase, const RealVec& chi1,
                                      const CriticalPointReport& report, double bound) {
    const int n = mesh.vertex_count();
    CplxVec tilde(n);
    for (int v = 0; v < n; ++v) tilde[v] = dphase[v] != cplx(0.0) ? -b[v] / dphase[v] : cplx(0.0);
    average_near(mesh, tilde, critical_locations(report), 0.5 * mesh.resolution);
    const double limit = bound * std::max(1.0, b.cwiseAbs().maxCoeff()) / mesh.resolution;
    for (int v = 0; v < n; ++v)
        if (!(std::abs(tilde[v]) <= limit)) {
            std::ostringstream msg;
            msg << "r12 quotient " << std::abs(tilde[v]) << " near a critical point exceeds " << limit
                << ": decay of b insufficient, increase the vanishing order";
            throw SolverError(msg.str());
        }
    CplxVec r12(n);
    for (int v = 0; v < n; ++v) r12[v] = (1.0 - chi1[v]) * tilde[v];
    return {r12, tilde};
}

HoloFunction build_a0(const Mesh& mesh, const CplxVec& r12_tilde, const std::optional<ArcSpec>& gamma0,
                      const FitOptions& options, double tolerance, double* residual) {
    if (residual) *residual = 0.0;
    if (!gamma0) return HoloFunction();
    ArcCondition arc{*gamma0, ArcPart::Real, {}, {}};
    for (int j : mesh.boundary_on(Arc::Gamma0)) {
        arc.theta.push_back(mesh.boundary_theta[j]);
        arc.target.push_back(-r12_tilde[mesh.boundary[j]].real());
    }
    FitOptions o = options;
    o.arc_tolerance = tolerance;
    const FitResult fit = fit_holomorphic_on_arc({}, arc, o);
    if (residual) *residual = fit.arc_residual;
    return fit.function;
}

// -------------------------------------------------------------------- setup

CgoSetup prepare_cgo(const Mesh& mesh, const RealVec& V, const HoloFunction& phase, const CriticalPointReport& report,
                     cplx p, const HoloFunction& amplitude, const CgoOptions& options,
                     std::shared_ptr<const SchrodingerSystem> system) {
    CgoSetup s;
    s.mesh = &mesh;
    s.V = V;
    s.phase = phase;
    s.amplitude = amplitude;
    s.report = report;
    s.p = p;
    s.options = options;
    s.cutoffs = make_cutoffs(report, p);
    s.system = system ? system : std::make_shared<SchrodingerSystem>(mesh, V);
    s.locator = std::make_shared<PointLocator>(mesh);

    const int n = mesh.vertex_count();
    s.phase_values.resize(n);
    s.dphase.resize(n);
    s.a_values.resize(n);
    s.phi.resize(n);
    s.psi.resize(n);
    s.chi.resize(n);
    s.chi1.resize(n);
    for (int v = 0; v < n; ++v) {
        const cplx z = mesh.vertices[v];
        s.phase_values[v] = phase(z);
        s.dphase[v] = phase.derivative(z);
        s.a_values[v] = amplitude(z);
        s.phi[v] = s.phase_values[v].real();
        s.psi[v] = s.phase_values[v].imag();
        s.chi[v] = s.cutoffs.chi(z);
        s.chi1[v] = s.cutoffs.chi1(z);
        if (s.chi[v] > 0.0) s.max_dpsi_support = std::max(s.max_dpsi_support, 0.5 * std::abs(s.dphase[v]));
    }

    JetOperator jets(mesh);
    s.theta = theta_field(mesh, jets, V, s.a_values).theta;

    const double radius = options.jet_radius_factor * mesh.resolution;
    std::vector<JetTarget> targets;
    targets.push_back({p, extract_jets(*s.locator, s.theta, p, radius, 1)});
    for (const auto& cp : report.points)
        if (std::abs(cp.z - p) > 1e-8) targets.push_back({cp.z, extract_jets(*s.locator, s.theta, cp.z, radius, 3)});
    const FitResult jf = build_jet_form(targets, mesh.domain.gamma0, options.fit);
    s.jet_form = jf.function;
    s.jet_residual = jf.arc_residual;

    s.omega.resize(n);
    s.b.resize(n);
    s.dbar_b.resize(n);
    for (int v = 0; v < n; ++v) {
        s.omega[v] = s.jet_form.derivative(mesh.vertices[v]);
        s.b[v] = s.theta[v] - s.omega[v];
        s.dbar_b[v] = -std::exp(2.0 * mesh.rho[v]) * s.a_values[v] * V[v] / 4.0;
    }

    std::tie(s.r12, s.r12_tilde) = build_r12(mesh, s.b, s.dphase, s.chi1, report, options.r12_bound);

    CplxVec dbar_r12(n);
    for (int v = 0; v < n; ++v) {
        const cplx num = s.cutoffs.dzbar_chi1(mesh.vertices[v]) * s.b[v] - (1.0 - s.chi1[v]) * s.dbar_b[v];
        dbar_r12[v] = s.dphase[v] != cplx(0.0) ? num / s.dphase[v] : cplx(0.0);
    }
    average_near(mesh, dbar_r12, critical_locations(report), 0.5 * mesh.resolution);
    const std::vector<Jet> dj = jets.all(dbar_r12);
    s.lap_r12.resize(n);
    for (int v = 0; v < n; ++v) s.lap_r12[v] = -4.0 * dj[v].dz();

    s.a0 = build_a0(mesh, s.r12_tilde, mesh.domain.gamma0, options.fit, options.a0_tolerance, &s.a0_residual);
    s.a0_values = sample(mesh, [&](cplx z) { return s.a0(z); });
    return s;
}

CgoSetup prepare_mirror(const CgoSetup& setup) {
    return prepare_cgo(*setup.mesh, setup.V, -setup.phase, setup.report, setup.p, setup.amplitude, setup.options,
                       setup.system);
}

// ---------------------------------------------------------------------- r11

void check_resolvable(const CgoSetup& s, double h) {
    const double need = s.options.resolvability_factor * s.mesh->resolution * s.max_dpsi_support;
    if (!(h > 0.0) || h < need) {
        std::ostringstream msg;
        msg << "mesh cannot resolve phase: h = " << h << " is below " << need;
        throw ResolutionError(msg.str());
    }
}

R11Result build_r11(const CgoSetup& s, double h) {
    check_resolvable(s, h);
    const Mesh& m = *s.mesh;
    const int n = m.vertex_count();
    R11Result out{CplxVec::Zero(n), CplxVec::Zero(n), CplxVec::Zero(n)};
    if (s.b.cwiseAbs().maxCoeff() == 0.0) return out;

    const Cutoffs& c = s.cutoffs;
    const double cover = 0.25 * c.d + 2.0 * m.resolution;
    CplxVec bvals = CplxVec::Zero(n), lower = CplxVec::Zero(n);
    for (int v = 0; v < n; ++v)
        if (std::abs(m.vertices[v] - c.center) < cover) {
            bvals[v] = s.b[v];
            lower[v] = -std::conj(s.dphase[v]) / h * s.b[v] + s.dbar_b[v];
        }
    const HoloFunction& phase = s.phase;
    auto wave = [&phase, h](cplx z) { return std::exp(2.0 * kI * phase(z).imag() / h); };
    const CauchyTransform T(m, bvals, [&](cplx z) { return wave(z) * c.chi1(z); });
    const CauchyTransform T_lower(m, lower, [&](cplx z) { return wave(z) * c.chi1(z); });
    const CauchyTransform T_edge(m, bvals, [&](cplx z) { return wave(z) * c.dzbar_chi1(z); });

    for (int v = 0; v < n; ++v) {
        if (s.chi[v] <= 0.0) continue;
        const cplx z = m.vertices[v];
        const cplx back = std::exp(-2.0 * kI * s.psi[v] / h);
        const cplx t = T(z);
        out.r11[v] = -s.chi[v] * back * t;
        const cplx dchi = c.dz_chi(z);
        if (dchi == cplx(0.0)) continue;
        out.eta[v] = -back * t * dchi;
        const cplx t2 = T_lower(z) + T_edge(z);
        out.dbar_eta[v] = -back * (std::conj(s.dphase[v]) / h * t * dchi + t2 * dchi + t * c.laplacian_chi(z) / 4.0);
    }
    return out;
}

// --------------------------------------------------------------- solutions

namespace {

using RowIndex = std::vector<int>;

SparseMatrix conjugate(const SparseMatrix& A, const RealVec& phi, double h) {
    SparseMatrix P = A;
    for (int k = 0; k < P.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(P, k); it; ++it)
            it.valueRef() *= std::exp((phi[it.col()] - phi[it.row()]) / h);
    return P;
}

SparseMatrix submatrix(const SparseMatrix& P, const RowIndex& row_slot, const RowIndex& col_slot, int rows, int cols) {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < P.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(P, k); it; ++it) {
            const int r = row_slot[it.row()], c = col_slot[it.col()];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    SparseMatrix S(rows, cols);
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

}  // namespace

CgoSolution complete_solution(const CgoSetup& s, double h) {
    const Mesh& m = *s.mesh;
    const int n = m.vertex_count();
    CgoSolution sol;
    sol.h = h;
    sol.r11 = build_r11(s, h);
    sol.r1 = sol.r11.r11 + h * s.r12;
    sol.residual.resize(n);
    for (int v = 0; v < n; ++v)
        sol.residual[v] = std::exp(-2.0 * m.rho[v]) * (-4.0 * sol.r11.dbar_eta[v] + h * s.lap_r12[v]) + s.V[v] * sol.r1[v];

    sol.w0.resize(n);
    for (int v = 0; v < n; ++v)
        sol.w0[v] = 2.0 * (std::exp(kI * s.psi[v] / h) * (s.a_values[v] + h * s.a0_values[v] + sol.r1[v])).real();

    const SparseMatrix P = conjugate(s.system->matrix(), s.phi, h);
    const std::vector<int>& interior = s.system->interior();
    RowIndex int_slot(n, -1), free_slot(n, -1);
    std::vector<int> free_list;
    for (std::size_t k = 0; k < interior.size(); ++k) int_slot[interior[k]] = static_cast<int>(k);
    for (int v = 0; v < n; ++v) {
        const int j = m.boundary_slot[v];
        if (j >= 0 && m.boundary_arc[j] == Arc::Gamma0) continue;
        free_slot[v] = static_cast<int>(free_list.size());
        free_list.push_back(v);
    }
    const int ni = static_cast<int>(interior.size()), nf = static_cast<int>(free_list.size());

    RealVec trial = sol.w0;
    for (int j : m.boundary_on(Arc::Gamma0)) trial[m.boundary[j]] = 0.0;
    const RealVec Pw = P * trial;
    RealVec rhs(ni);
    for (int k = 0; k < ni; ++k) rhs[k] = -Pw[interior[k]];

    sol.r2 = RealVec::Zero(n);
    if (s.options.remainder_mode == "min_norm") {
        const SparseMatrix B = submatrix(P, int_slot, free_slot, ni, nf);
        RealVec inv_mass(nf);
        for (int k = 0; k < nf; ++k) inv_mass[k] = 1.0 / m.mass[free_list[k]];
        const SparseMatrix S = B * inv_mass.asDiagonal() * B.transpose();
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
        if (ldlt.info() != Eigen::Success) throw SolverError("minimal-norm remainder system failed to factorise");
        const RealVec lambda = ldlt.solve(rhs);
        const RealVec r = inv_mass.asDiagonal() * (B.transpose() * lambda);
        for (int k = 0; k < nf; ++k) sol.r2[free_list[k]] = r[k];
    } else if (s.options.remainder_mode == "dirichlet") {
        const SparseMatrix Pii = submatrix(P, int_slot, int_slot, ni, ni);
        Eigen::SparseLU<SparseMatrix> lu;
        lu.compute(Pii);
        if (lu.info() != Eigen::Success) throw SolverError("Dirichlet eigenvalue: conjugated system is singular for potential '" + s.system->name() + "'");
        const RealVec x = lu.solve(rhs);
        for (int k = 0; k < ni; ++k) sol.r2[interior[k]] = x[k];
        for (int j : m.boundary_on(Arc::Gamma)) sol.r2[m.boundary[j]] = 0.0;
    } else {
        throw ConfigurationError("unknown remainder mode '" + s.options.remainder_mode + "'");
    }
    for (int j : m.boundary_on(Arc::Gamma0)) sol.r2[m.boundary[j]] = -sol.w0[m.boundary[j]];
    for (int v = 0; v < n; ++v)
        if (int_slot[v] >= 0 && free_slot[v] < 0) throw SolverError("interior vertex missing from the free set");

    sol.W = sol.w0 + sol.r2;
    const RealVec PW = P * sol.W;
    double res = 0.0, scale = 0.0;
    for (int v : interior) res = std::max(res, std::abs(PW[v]));
    for (int k = 0; k < P.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(P, k); it; ++it) scale = std::max(scale, std::abs(it.value() * sol.W[it.col()]));
    if (!(res <= 1e-9 * std::max(scale, 1e-300))) {
        std::ostringstream msg;
        msg << "CGO completion left relative interior residual " << res / scale;
        throw SolverError(msg.str());
    }

    const int nb = m.boundary_count();
    sol.traces.dirichlet.resize(nb);
    sol.traces.neumann.resize(nb);
    sol.traces.log_scale.resize(nb);
    for (int j = 0; j < nb; ++j) {
        const int v = m.boundary[j];
        sol.traces.dirichlet[j] = sol.W[v];
        sol.traces.neumann[j] = PW[v] / m.boundary_weight[j];
        sol.traces.log_scale[j] = s.phi[v] / h;
        if (m.boundary_arc[j] == Arc::Gamma0) sol.gamma0_max = std::max(sol.gamma0_max, std::abs(sol.W[v]));
    }
    return sol;
}

RealVec weighted_product(const CgoSolution& u1, const CgoSolution& u2) { return u1.W.cwiseProduct(u2.W); }

// -------------------------------------------------------------------- norms

double l2_norm(const Mesh& mesh, const CplxVec& f) { return std::sqrt(mesh.mass.dot(RealVec(f.cwiseAbs2()))); }
double l2_norm(const Mesh& mesh, const RealVec& f) { return std::sqrt(mesh.mass.dot(RealVec(f.cwiseAbs2()))); }

double h1_seminorm(const Mesh& mesh, const CplxVec& f) {
    double s = 0.0;
    for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
        const auto& t = mesh.cells[c];
        const cplx p0 = mesh.vertices[t[0]], p1 = mesh.vertices[t[1]], p2 = mesh.vertices[t[2]];
        const double x1 = (p1 - p0).real(), y1 = (p1 - p0).imag(), x2 = (p2 - p0).real(), y2 = (p2 - p0).imag();
        const double det = x1 * y2 - x2 * y1;
        const cplx d1 = f[t[1]] - f[t[0]], d2 = f[t[2]] - f[t[0]];
        const cplx gx = (d1 * y2 - d2 * y1) / det, gy = (x1 * d2 - x2 * d1) / det;
        s += 0.5 * std::abs(det) * (std::norm(gx) + std::norm(gy));
    }
    return std::sqrt(s);
}

SlopeFit fit_exponent(const std::vector<double>& h, const std::vector<double>& values, int log_power) {
    if (h.size() != values.size() || h.size() < 2) throw PreconditionError("slope fit needs at least two samples");
    SlopeFit out;
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    if (vmax < 1e-12) {
        out.exact_zero = true;
        return out;
    }
    const int n = static_cast<int>(h.size());
    std::vector<double> x(n), y(n);
    for (int k = 0; k < n; ++k) {
        x[k] = std::log(h[k]);
        y[k] = std::log(std::abs(values[k])) - log_power * std::log(std::abs(std::log(h[k])));
    }
    double mx = 0, my = 0;
    for (int k = 0; k < n; ++k) {
        mx += x[k] / n;
        my += y[k] / n;
    }
    double sxx = 0, sxy = 0;
    for (int k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    out.exponent = sxy / sxx;
    if (n > 2) {
        double sse = 0;
        for (int k = 0; k < n; ++k) {
            const double e = y[k] - (my + out.exponent * (x[k] - mx));
            sse += e * e;
        }
        out.stderr_ = std::sqrt(sse / (n - 2) / sxx);
    }
    return out;
}

// ------------------------------------------------------------------ reports

nlohmann::json ScalingReport::summary() const {
    nlohmann::json fitsj = nlohmann::json::object();
    for (const auto& [name, f] : fits)
        fitsj[name] = {{"exponent", f.exponent},
                       {"band_low", f.exponent - 2.0 * f.stderr_},
                       {"band_high", f.exponent + 2.0 * f.stderr_},
                       {"exact_zero", f.exact_zero}};
    return {{"fits", fitsj}};
}

void ScalingReport::write_csv(std::ostream& out) const {
    out.precision(17);
    out << "h,norm_name,value\n";
    for (const auto& r : rows) out << r.h << ',' << r.norm << ',' << r.value << '\n';
}

ScalingReport residual_scaling_report(const CgoSetup& setup, const std::vector<double>& h_list) {
    const Mesh& m = *setup.mesh;
    struct Series {
        const char* name;
        int log_power;
        std::vector<double> values;
    };
    std::vector<Series> series{{"r11_l2", 0, {}},        {"r1_l2", 0, {}},     {"r1_minus_h_r12tilde_l2", 0, {}},
                               {"eta_l2", 1, {}},        {"eta_h1", 1, {}},    {"ansatz_residual_l2", 1, {}},
                               {"r2_l2", 1, {}}};
    std::vector<double> used;
    ScalingReport rep;
    for (double h : h_list) {
        try {
            check_resolvable(setup, h);
        } catch (const ResolutionError&) {
            continue;
        }
        const CgoSolution sol = complete_solution(setup, h);
        const double eta_l2 = l2_norm(m, sol.r11.eta);
        const double vals[7] = {l2_norm(m, sol.r11.r11),
                                l2_norm(m, sol.r1),
                                l2_norm(m, CplxVec(sol.r1 - h * setup.r12_tilde)),
                                eta_l2,
                                std::sqrt(eta_l2 * eta_l2 + std::pow(h1_seminorm(m, sol.r11.eta), 2)),
                                l2_norm(m, sol.residual),
                                l2_norm(m, sol.r2)};
        used.push_back(h);
        for (int k = 0; k < 7; ++k) {
            series[k].values.push_back(vals[k]);
            rep.rows.push_back({h, series[k].name, vals[k]});
        }
    }
    if (used.size() < 4) throw PreconditionError("fewer than 4 resolvable h values in the scaling sweep");
    for (const auto& s : series) rep.fits.emplace_back(s.name, fit_exponent(used, s.values, s.log_power));
    return rep;
}

}  // namespace calderon
