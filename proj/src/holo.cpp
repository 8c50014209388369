#include "calderon/holo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace calderon {

// ---------------------------------------------------------------- HoloFunction

HoloFunction::HoloFunction(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
}

cplx HoloFunction::operator()(cplx z) const {
    cplx s = 0.0;
    for (int k = degree(); k >= 0; --k) s = s * z + coeffs_[k];
    return s;
}

cplx HoloFunction::derivative(cplx z, int order) const {
    cplx s = 0.0;
    for (int k = degree(); k >= order; --k) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= k - j;
        s = s * z + f * coeffs_[k];
    }
    return s;
}

HoloFunction HoloFunction::derivative_function(int order) const {
    if (order > degree()) return HoloFunction();
    std::vector<cplx> c(degree() - order + 1);
    for (int k = order; k <= degree(); ++k) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= k - j;
        c[k - order] = f * coeffs_[k];
    }
    return HoloFunction(std::move(c));
}

bool HoloFunction::is_constant() const {
    for (int k = 1; k <= degree(); ++k)
        if (coeffs_[k] != cplx(0.0)) return false;
    return true;
}

HoloFunction HoloFunction::operator-() const { return *this * cplx(-1.0); }

HoloFunction HoloFunction::operator+(const HoloFunction& other) const {
    std::vector<cplx> c(std::max(coeffs_.size(), other.coeffs_.size()), 0.0);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) c[k] += coeffs_[k];
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) c[k] += other.coeffs_[k];
    return HoloFunction(std::move(c));
}

HoloFunction HoloFunction::operator*(cplx s) const {
    std::vector<cplx> c = coeffs_;
    for (auto& v : c) v *= s;
    return HoloFunction(std::move(c));
}

nlohmann::json HoloFunction::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const cplx& c : coeffs_) arr.push_back({c.real(), c.imag()});
    return arr;
}

HoloFunction HoloFunction::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigurationError("holomorphic coefficients must be a JSON array");
    std::vector<cplx> c;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2) throw ConfigurationError("coefficient must be a [re, im] pair");
        c.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return HoloFunction(std::move(c));
}

// ------------------------------------------------------------ Cauchy transform

namespace {

constexpr double kFineW[7] = {0.225,
                              0.132394152788506, 0.132394152788506, 0.132394152788506,
                              0.125939180544827, 0.125939180544827, 0.125939180544827};
constexpr double kFineA = 0.059715871789770, kFineB = 0.470142064105115;
constexpr double kFineC = 0.797426985353087, kFineD = 0.101286507323456;
constexpr double kFineBary[7][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                    {kFineA, kFineB, kFineB}, {kFineB, kFineA, kFineB}, {kFineB, kFineB, kFineA},
                                    {kFineC, kFineD, kFineD}, {kFineD, kFineC, kFineD}, {kFineD, kFineD, kFineC}};
constexpr double kCoarseBary[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};

// integral over the edge a -> b of F dxi-bar, F = (alpha + beta xi + gamma xi-bar) antiderivative
cplx edge_term(cplx a, cplx b, cplx z, cplx alpha, cplx beta, cplx gamma) {
    const cplx d = b - a;
    const cplx rho = d / std::conj(d);
    const cplx u0 = a - z;
    const cplx s0 = std::conj(u0);
    const cplx s1 = std::conj(b - z);
    const cplx q0 = u0 - rho * s0;
    const cplx a0 = alpha + gamma * std::conj(z);
    const cplx n1 = a0 * rho + gamma * q0 + beta * (q0 * rho + z * rho);
    const cplx n2 = gamma * rho + 0.5 * beta * rho * rho;
    cplx out = n1 * (s1 - s0) + 0.5 * n2 * (s1 * s1 - s0 * s0);
    if (std::abs(s0) > 0.0 && std::abs(s1) > 0.0) {
        const cplx n0 = q0 * (a0 + 0.5 * beta * (q0 + 2.0 * z));
        const cplx ratio = s1 / s0;
        out += n0 * cplx(std::log(std::abs(ratio)), std::arg(ratio));
    }
    return -out;
}

}  // namespace

CauchyTransform::CauchyTransform(const Mesh& mesh, const CplxVec& values, std::function<cplx(cplx)> modulation) {
    if (values.size() != mesh.vertex_count()) throw PreconditionError("Cauchy transform data size mismatch");
    const double margin = 1.0 - 2.0 * mesh.resolution;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (values[v] != cplx(0.0) && std::abs(mesh.vertices[v]) > margin + 1e-12)
            throw PreconditionError("Cauchy transform data must vanish within two cells of the boundary");
    for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
        const auto& t = mesh.cells[c];
        const cplx g[3] = {values[t[0]], values[t[1]], values[t[2]]};
        if (g[0] == cplx(0.0) && g[1] == cplx(0.0) && g[2] == cplx(0.0)) continue;
        Cell cell;
        for (int k = 0; k < 3; ++k) cell.corner[k] = mesh.vertices[t[k]];
        cell.centroid = (cell.corner[0] + cell.corner[1] + cell.corner[2]) / 3.0;
        cell.diameter = std::max({std::abs(cell.corner[1] - cell.corner[0]), std::abs(cell.corner[2] - cell.corner[1]),
                                  std::abs(cell.corner[0] - cell.corner[2])});
        const double area = mesh.cell_area(c);
        cplx prod[3];
        for (int k = 0; k < 3; ++k) prod[k] = modulation ? g[k] * modulation(cell.corner[k]) : g[k];
        // gradient of the linear interpolant of prod
        const cplx p0 = cell.corner[0], p1 = cell.corner[1], p2 = cell.corner[2];
        const double x1 = (p1 - p0).real(), y1 = (p1 - p0).imag(), x2 = (p2 - p0).real(), y2 = (p2 - p0).imag();
        const double det = x1 * y2 - x2 * y1;
        const cplx d1 = prod[1] - prod[0], d2 = prod[2] - prod[0];
        const cplx gx = (d1 * y2 - d2 * y1) / det;
        const cplx gy = (x1 * d2 - x2 * d1) / det;
        cell.beta = 0.5 * (gx - kI * gy);
        cell.gamma = 0.5 * (gx + kI * gy);
        cell.alpha = prod[0] - cell.beta * p0 - cell.gamma * std::conj(p0);
        auto point = [&](const double* bary) {
            const cplx xi = bary[0] * p0 + bary[1] * p1 + bary[2] * p2;
            cplx val = bary[0] * g[0] + bary[1] * g[1] + bary[2] * g[2];
            if (modulation) val *= modulation(xi);
            return std::make_pair(xi, val);
        };
        for (int q = 0; q < 7; ++q) {
            auto [xi, val] = point(kFineBary[q]);
            cell.fine[q] = {xi, kFineW[q] * area * val};
        }
        for (int q = 0; q < 3; ++q) {
            auto [xi, val] = point(kCoarseBary[q]);
            cell.coarse[q] = {xi, area / 3.0 * val};
        }
        cells_.push_back(cell);
    }
}

cplx CauchyTransform::operator()(cplx z) const {
    const cplx zc = std::conj(z);
    cplx sum = 0.0;
    for (const Cell& c : cells_) {
        const double dist2 = std::norm(z - c.centroid);
        const double diam2 = c.diameter * c.diameter;
        if (dist2 < 9.0 * diam2) {
            cplx edges = 0.0;
            for (int k = 0; k < 3; ++k)
                edges += edge_term(c.corner[k], c.corner[(k + 1) % 3], z, c.alpha, c.beta, c.gamma);
            sum += 0.5 * kI * edges;
        } else if (dist2 < 64.0 * diam2) {
            for (const auto& [xi, wv] : c.fine) sum += wv / (zc - std::conj(xi));
        } else {
            for (const auto& [xi, wv] : c.coarse) sum += wv / (zc - std::conj(xi));
        }
    }
    return sum / kPi;
}

CplxVec CauchyTransform::evaluate(const std::vector<cplx>& points) const {
    CplxVec out(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) out[k] = (*this)(points[k]);
    return out;
}

CplxVec cauchy_transform(const Mesh& mesh, const CplxVec& f, const std::vector<cplx>& points) {
    return CauchyTransform(mesh, f).evaluate(points);
}

// ---------------------------------------------------------- constrained fits

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// real rows of the complex functional sum_k r_k c_k, unknowns [Re c, Im c]
void functional_rows(const std::vector<cplx>& r, double* re_row, double* im_row) {
    const int n = static_cast<int>(r.size());
    for (int k = 0; k < n; ++k) {
        if (re_row) {
            re_row[k] = r[k].real();
            re_row[n + k] = -r[k].imag();
        }
        if (im_row) {
            im_row[k] = r[k].imag();
            im_row[n + k] = r[k].real();
        }
    }
}

std::vector<cplx> derivative_functional(cplx z, int order, int degree) {
    std::vector<cplx> r(degree + 1, 0.0);
    for (int k = order; k <= degree; ++k) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= k - j;
        r[k] = f * std::pow(z, k - order);
    }
    return r;
}

std::vector<double> arc_nodes(const ArcSpec& arc, int count) {
    std::vector<double> t(count);
    const double len = arc.length();
    for (int k = 0; k < count; ++k) t[k] = arc.theta_a + len * (count == 1 ? 0.5 : double(k) / (count - 1));
    return t;
}

double arc_part(const HoloFunction& f, double theta, ArcPart part) {
    const cplx v = f(std::polar(1.0, theta));
    return part == ArcPart::Imag ? v.imag() : v.real();
}

}  // namespace

FitVerification verify_fit(const HoloFunction& f, const std::vector<PointConstraint>& constraints,
                           const std::optional<ArcCondition>& arc, const FitOptions& options) {
    FitVerification v;
    for (const auto& c : constraints)
        v.constraint_residual =
            std::max(v.constraint_residual, std::abs(f.derivative(c.z, c.order) - c.value) / std::max(1.0, std::abs(c.value)));
    if (arc) {
        if (!arc->theta.empty()) {
            for (std::size_t k = 0; k < arc->theta.size(); ++k)
                v.arc_residual = std::max(v.arc_residual, std::abs(arc_part(f, arc->theta[k], arc->part) - arc->target[k]));
        } else {
            const int count = options.nodes_per_degree * std::max(options.degree, 1) * options.verify_factor;
            for (double t : arc_nodes(arc->arc, count)) v.arc_residual = std::max(v.arc_residual, std::abs(arc_part(f, t, arc->part)));
        }
    }
    return v;
}

namespace {

FitResult solve_fit(const std::vector<PointConstraint>& constraints, const std::optional<ArcCondition>& arc,
                    const FitOptions& options) {
    const int K = options.degree;
    if (K < 0) throw PreconditionError("degree must be nonnegative");
    const int n2 = 2 * (K + 1);
    const int m = 2 * static_cast<int>(constraints.size());
    if (m > n2) throw InfeasibleFit("infeasible at degree " + std::to_string(K) + ": more constraints than coefficients; try a larger degree");

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Cr(m, n2);
    VectorXd d(m);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const auto r = derivative_functional(constraints[i].z, constraints[i].order, K);
        functional_rows(r, Cr.row(2 * i).data(), Cr.row(2 * i + 1).data());
        d[2 * i] = constraints[i].value.real();
        d[2 * i + 1] = constraints[i].value.imag();
    }
    const MatrixXd C = Cr;

    std::vector<double> theta, target, weight;
    if (arc) {
        if (!arc->theta.empty()) {
            if (arc->theta.size() != arc->target.size()) throw PreconditionError("arc samples and targets differ in size");
            theta = arc->theta;
            target = arc->target;
        } else {
            theta = arc_nodes(arc->arc, options.nodes_per_degree * std::max(K, 1));
            target.assign(theta.size(), 0.0);
        }
        const double w = std::sqrt(arc->arc.length() / theta.size());
        weight.assign(theta.size(), w);
        if (options.weight_jitter > 0.0) {
            std::mt19937_64 rng(options.seed);
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            for (double& x : weight) x *= 1.0 + options.weight_jitter * U(rng);
        }
    }
    const int na = static_cast<int>(theta.size());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> A(na + n2, n2);
    VectorXd b = VectorXd::Zero(na + n2);
    A.setZero();
    for (int k = 0; k < na; ++k) {
        std::vector<cplx> r(K + 1);
        for (int j = 0; j <= K; ++j) r[j] = std::polar(1.0, j * theta[k]);
        if (arc->part == ArcPart::Imag)
            functional_rows(r, nullptr, A.row(k).data());
        else
            functional_rows(r, A.row(k).data(), nullptr);
        A.row(k) *= weight[k];
        b[k] = weight[k] * target[k];
    }
    const double reg = std::sqrt(options.regularization * 2.0 * kPi);
    for (int j = 0; j <= K; ++j) {
        A(na + j, j) = reg * std::max(j, 1);
        A(na + K + 1 + j, K + 1 + j) = reg * std::max(j, 1);
    }

    VectorXd x0 = VectorXd::Zero(n2);
    MatrixXd N = MatrixXd::Identity(n2, n2);
    if (m > 0) {
        x0 = C.completeOrthogonalDecomposition().solve(d);
        Eigen::JacobiSVD<MatrixXd> svd(C, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        int rank = 0;
        for (int k = 0; k < s.size(); ++k)
            if (s[k] > 1e-12 * s[0]) ++rank;
        N = svd.matrixV().rightCols(n2 - rank);
    }
    VectorXd x = x0;
    if (N.cols() > 0) {
        const MatrixXd AN = A * N;
        Eigen::JacobiSVD<MatrixXd> ls(AN, Eigen::ComputeThinU | Eigen::ComputeThinV);
        ls.setThreshold(1e-15);
        x += N * ls.solve(VectorXd(b - A * x0));
    }
    std::vector<cplx> coeffs(K + 1);
    for (int j = 0; j <= K; ++j) coeffs[j] = cplx(x[j], x[K + 1 + j]);

    FitResult out{HoloFunction(std::move(coeffs)), 0.0, 0.0};
    const FitVerification v = verify_fit(out.function, constraints, arc, options);
    out.arc_residual = v.arc_residual;
    out.constraint_residual = v.constraint_residual;
    return out;
}

}  // namespace

FitResult fit_holomorphic_on_arc(const std::vector<PointConstraint>& constraints,
                                 const std::optional<ArcCondition>& arc, const FitOptions& options) {
    // the penalty is relaxed tenfold at a time until the arc tolerance is met
    FitOptions o = options;
    FitResult out;
    for (int step = 0; step <= 8; ++step) {
        out = solve_fit(constraints, arc, o);
        if (out.constraint_residual <= o.hard_tolerance && out.arc_residual <= o.arc_tolerance) return out;
        if (o.regularization <= 0.0) break;
        o.regularization /= 10.0;
    }
    std::ostringstream msg;
    msg << "infeasible at degree " << options.degree << ": arc residual " << out.arc_residual
        << ", constraint residual " << out.constraint_residual << "; try a larger degree";
    throw InfeasibleFit(msg.str());
}

// ------------------------------------------------------------ critical points

namespace {

struct WindingProbe {
    const HoloFunction* f;
    double floor;
    bool failed = false;

    double segment(cplx a, cplx fa, cplx b, cplx fb, int depth) {
        if (std::abs(fa) <= floor || std::abs(fb) <= floor) {
            failed = true;
            return 0.0;
        }
        const double d = std::arg(fb / fa);
        if (std::abs(d) < 0.5 || depth > 48) return d;
        const cplx mid = 0.5 * (a + b);
        const cplx fm = (*f)(mid);
        return segment(a, fa, mid, fm, depth + 1) + segment(mid, fm, b, fb, depth + 1);
    }

    // winding number of f along the closed polygon, nullopt when f nearly vanishes on it
    std::optional<int> polygon(const std::vector<cplx>& corners, int pieces) {
        failed = false;
        double total = 0.0;
        for (std::size_t e = 0; e < corners.size(); ++e) {
            const cplx a = corners[e], b = corners[(e + 1) % corners.size()];
            cplx prev = a, fprev = (*f)(a);
            for (int k = 1; k <= pieces; ++k) {
                const cplx next = a + (b - a) * (double(k) / pieces);
                const cplx fnext = (*f)(next);
                total += segment(prev, fprev, next, fnext, 0);
                prev = next;
                fprev = fnext;
            }
        }
        const double w = total / (2.0 * kPi);
        if (failed || std::abs(w - std::round(w)) > 0.2) return std::nullopt;
        return static_cast<int>(std::lround(w));
    }
};

struct Box {
    double x0, x1, y0, y1;
    std::vector<cplx> corners() const { return {cplx(x0, y0), cplx(x1, y0), cplx(x1, y1), cplx(x0, y1)}; }
    double size() const { return std::max(x1 - x0, y1 - y0); }
    cplx center() const { return cplx(0.5 * (x0 + x1), 0.5 * (y0 + y1)); }
    bool contains(cplx z, double pad) const {
        return z.real() >= x0 - pad && z.real() <= x1 + pad && z.imag() >= y0 - pad && z.imag() <= y1 + pad;
    }
};

}  // namespace

int CriticalPointReport::located_count() const {
    int n = 0;
    for (const auto& p : points)
        if (!p.boundary) n += p.multiplicity;
    return n;
}

bool CriticalPointReport::morse() const {
    for (const auto& p : points)
        if (p.degenerate) return false;
    return true;
}

nlohmann::json CriticalPointReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points)
        pts.push_back({{"x", p.z.real()},
                       {"y", p.z.imag()},
                       {"hessian_abs", p.hessian_abs},
                       {"multiplicity", p.multiplicity},
                       {"boundary", p.boundary},
                       {"degenerate", p.degenerate}});
    return {{"points", pts}, {"count_check", count_check}};
}

CriticalPointReport find_critical_points(const HoloFunction& phase) {
    if (phase.is_constant()) throw PreconditionError("critical points of a constant phase are undefined");
    const HoloFunction dphi = phase.derivative_function(1);
    double scale = 0.0;
    for (const cplx& c : dphi.coefficients()) scale += std::abs(c);
    WindingProbe probe{&dphi, 1e-14 * scale};

    std::vector<cplx> roots;
    std::vector<int> mult;
    struct Item {
        Box box;
        int winding;
    };
    std::vector<Item> stack;
    {
        Box root{-1.01, 1.01, -1.01, 1.01};
        std::optional<int> w;
        for (int k = 0; k < 8 && !w; ++k) {
            w = probe.polygon(root.corners(), 32);
            if (!w) root = {root.x0 - 0.003, root.x1 + 0.003, root.y0 - 0.003, root.y1 + 0.003};
        }
        if (!w) throw SolverError("critical-point search could not enclose the disk");
        if (*w > 0) stack.push_back({root, *w});
    }
    const double offsets[] = {0.0137, -0.0213, 0.0311, -0.0377, 0.0459, -0.0523};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        const Box& B = it.box;
        if (it.winding == 1 && B.size() < 0.1) {
            cplx z = B.center();
            bool ok = false;
            for (int k = 0; k < 80; ++k) {
                const cplx d2 = phase.derivative(z, 2);
                if (d2 == cplx(0.0)) break;
                const cplx step = dphi(z) / d2;
                z -= step;
                if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) {
                    ok = true;
                    break;
                }
            }
            if (ok && B.contains(z, 1e-12)) {
                roots.push_back(z);
                mult.push_back(1);
                continue;
            }
        }
        if (B.size() < 1e-9) {
            roots.push_back(B.center());
            mult.push_back(it.winding);
            continue;
        }
        bool split = false;
        for (double off : offsets) {
            const double sx = B.x0 + (0.5 + off) * (B.x1 - B.x0);
            const double sy = B.y0 + (0.5 - off) * (B.y1 - B.y0);
            const Box kids[4] = {{B.x0, sx, B.y0, sy}, {sx, B.x1, B.y0, sy}, {B.x0, sx, sy, B.y1}, {sx, B.x1, sy, B.y1}};
            std::vector<Item> found;
            int total = 0;
            bool good = true;
            for (const Box& kb : kids) {
                const auto w = probe.polygon(kb.corners(), 8);
                if (!w || *w < 0) {
                    good = false;
                    break;
                }
                total += *w;
                if (*w > 0) found.push_back({kb, *w});
            }
            if (!good || total != it.winding) continue;
            stack.insert(stack.end(), found.begin(), found.end());
            split = true;
            break;
        }
        if (!split) {
            // a zero sits on every trial split line: treat the box as one cluster
            roots.push_back(B.center());
            mult.push_back(it.winding);
        }
    }

    CriticalPointReport report;
    for (std::size_t k = 0; k < roots.size(); ++k) {
        const double r = std::abs(roots[k]);
        if (r > 1.0 + 1e-12) continue;
        CriticalPoint cp;
        cp.z = roots[k];
        cp.multiplicity = mult[k];
        cp.hessian_abs = std::abs(phase.derivative(cp.z, 2));
        cp.boundary = r >= 1.0 - 1e-12;
        cp.degenerate = cp.multiplicity > 1 || cp.hessian_abs <= 1e-8;
        report.points.push_back(cp);
    }
    std::sort(report.points.begin(), report.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return a.z.real() != b.z.real() ? a.z.real() < b.z.real() : a.z.imag() < b.z.imag();
    });

    std::vector<cplx> circle(512);
    for (int k = 0; k < 512; ++k) circle[k] = std::polar(1.0, 2.0 * kPi * k / 512);
    const auto w = probe.polygon(circle, 1);
    if (!w) throw SolverError("critical point on the unit circle: argument-principle count undefined");
    report.count_check = *w;
    if (report.count_check != report.located_count()) {
        std::ostringstream msg;
        msg << "critical-point search located " << report.located_count() << " zeros but the winding number is "
            << report.count_check;
        throw SolverError(msg.str());
    }
    return report;
}

// ------------------------------------------------------------------ builders

MorsePhase build_morse_phase(const DiskDomain& domain, cplx p, const PhaseOptions& options) {
    if (!(std::abs(p) < 1.0 - options.margin))
        throw PreconditionError("critical point must lie in the interior of the disk (|p| < 1 - margin)");
    MorsePhase out;
    if (!domain.has_gamma0()) {
        out.phase = HoloFunction({p * p + kI, -2.0 * p, 1.0});
        out.report = find_critical_points(out.phase);
        return out;
    }
    const std::vector<PointConstraint> hard{{p, 0, kI}, {p, 1, 0.0}};
    const ArcCondition arc{*domain.gamma0, ArcPart::Imag, {}, {}};
    std::string last;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        FitOptions fo = options.fit;
        if (attempt > 0) {
            fo.weight_jitter = options.retry_jitter;
            fo.seed = options.fit.seed + attempt;
        }
        const FitResult fit = fit_holomorphic_on_arc(hard, arc, fo);
        const CriticalPointReport report = find_critical_points(fit.function);
        bool found = false;
        for (const auto& cp : report.points) found |= std::abs(cp.z - p) < 1e-8;
        if (report.morse() && found && std::abs(fit.function.derivative(p, 2)) > 1e-8) {
            out.phase = fit.function;
            out.report = report;
            out.arc_residual = fit.arc_residual;
            out.retries = attempt;
            return out;
        }
        last = report.to_json().dump();
    }
    throw SolverError("Morse verification failed after retries; last report: " + last);
}

FitResult build_amplitude(const CriticalPointReport& report, cplx p, const std::optional<ArcSpec>& gamma0,
                          int vanish_order, const FitOptions& options) {
    bool has_p = false;
    std::vector<cplx> others;
    for (const auto& cp : report.points) {
        if (std::abs(cp.z - p) < 1e-8)
            has_p = true;
        else
            others.push_back(cp.z);
    }
    if (!has_p) throw PreconditionError("p is not among the reported critical points");
    std::vector<PointConstraint> hard{{p, 0, 1.0}};
    for (cplx q : others)
        for (int l = 0; l < vanish_order; ++l) hard.push_back({q, l, 0.0});
    if (!gamma0) {
        // product of ((z - q)/(p - q))^N is exact and needs no arc fit
        const int deg = vanish_order * static_cast<int>(others.size());
        if (deg <= options.degree) {
            HoloFunction a = HoloFunction::constant(1.0);
            for (cplx q : others)
                for (int l = 0; l < vanish_order; ++l) {
                    const std::vector<cplx>& c = a.coefficients();
                    std::vector<cplx> next(c.size() + 1, 0.0);
                    for (std::size_t k = 0; k < c.size(); ++k) {
                        next[k + 1] += c[k] / (p - q);
                        next[k] -= c[k] * q / (p - q);
                    }
                    a = HoloFunction(std::move(next));
                }
            const FitVerification v = verify_fit(a, hard, std::nullopt, options);
            return {a, 0.0, v.constraint_residual};
        }
        return fit_holomorphic_on_arc(hard, std::nullopt, options);
    }
    return fit_holomorphic_on_arc(hard, ArcCondition{*gamma0, ArcPart::Real, {}, {}}, options);
}

FitResult build_jet_form(const std::vector<JetTarget>& targets, const std::optional<ArcSpec>& gamma0,
                         const FitOptions& options) {
    std::vector<PointConstraint> hard;
    for (const auto& t : targets)
        for (std::size_t l = 0; l < t.jets.size(); ++l) hard.push_back({t.z, static_cast<int>(l) + 1, t.jets[l]});
    std::optional<ArcCondition> arc;
    if (gamma0) arc = ArcCondition{*gamma0, ArcPart::Imag, {}, {}};
    return fit_holomorphic_on_arc(hard, arc, options);
}

std::vector<cplx> extract_jets(const PointLocator& locator, const CplxVec& field, cplx center, double radius,
                               int orders, int samples) {
    if (std::abs(center) + radius >= 1.0) throw ResolutionError("jet contour around a critical point leaves the disk");
    std::vector<cplx> jets(orders, 0.0);
    for (int k = 0; k < samples; ++k) {
        const double t = 2.0 * kPi * k / samples;
        const cplx v = locator.interpolate(field, center + std::polar(radius, t));
        for (int l = 0; l < orders; ++l) jets[l] += v * std::polar(1.0, -l * t);
    }
    double fact = 1.0;
    for (int l = 0; l < orders; ++l) {
        if (l > 0) fact *= l;
        jets[l] *= fact / (samples * std::pow(radius, l));
    }
    return jets;
}

}  // namespace calderon
