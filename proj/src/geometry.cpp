#include "calderon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace calderon {

namespace {

double wrap_angle(double t) {
    double w = std::fmod(t, 2.0 * kPi);
    if (w < 0) w += 2.0 * kPi;
    return w;
}

double signed_area(cplx a, cplx b, cplx c) {
    return 0.5 * std::imag(std::conj(b - a) * (c - a));
}

}  // namespace

const char* arc_name(Arc arc) {
    switch (arc) {
        case Arc::Gamma: return "gamma";
        case Arc::Gamma0: return "gamma0";
        case Arc::Full: return "full";
    }
    return "?";
}

bool ArcSpec::contains(double theta, double tol) const {
    if (full) return true;
    const double span = length();
    double d = wrap_angle(theta - theta_a);
    if (d > 2.0 * kPi - tol) d -= 2.0 * kPi;
    return d >= -tol && d <= span + tol;
}

double ArcSpec::length() const {
    if (full) return 2.0 * kPi;
    double span = wrap_angle(theta_b - theta_a);
    return span;
}

bool DiskDomain::in_gamma0(double theta) const {
    return gamma0 && gamma0->contains(theta);
}

double Mesh::cell_area(int c) const {
    const auto& t = cells[c];
    return signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

std::vector<int> Mesh::boundary_on(Arc arc) const {
    std::vector<int> out;
    for (int j = 0; j < boundary_count(); ++j)
        if (arc == Arc::Full || boundary_arc[j] == arc) out.push_back(j);
    return out;
}

Mesh build_disk_mesh(double resolution, const DiskDomain& domain) {
    if (!(resolution > 0.0)) throw PreconditionError("resolution must be positive");
    Mesh m;
    m.domain = domain;
    const int n = std::max(1, static_cast<int>(std::ceil(1.0 / resolution - 1e-9)));
    m.rings = n;
    m.resolution = 1.0 / n;

    std::vector<std::vector<int>> ring(n + 1);
    m.vertices.push_back(0.0);
    ring[0].push_back(0);
    for (int k = 1; k <= n; ++k) {
        const int count = 6 * k;
        for (int j = 0; j < count; ++j) {
            ring[k].push_back(static_cast<int>(m.vertices.size()));
            m.vertices.push_back(std::polar(double(k) / n, 2.0 * kPi * j / count));
        }
    }

    for (int j = 0; j < 6; ++j) m.cells.push_back({0, ring[1][j], ring[1][(j + 1) % 6]});
    for (int k = 2; k <= n; ++k) {
        const auto& in = ring[k - 1];
        const auto& out = ring[k];
        const int mi = static_cast<int>(in.size());
        const int mo = static_cast<int>(out.size());
        int i = 0, o = 0;
        while (i < mi || o < mo) {
            const double ai = i < mi ? (i + 0.5) / mi : 9.0;
            const double ao = o < mo ? (o + 0.5) / mo : 9.0;
            if (ao <= ai) {
                m.cells.push_back({in[i % mi], out[o % mo], out[(o + 1) % mo]});
                ++o;
            } else {
                m.cells.push_back({in[i % mi], out[o % mo], in[(i + 1) % mi]});
                ++i;
            }
        }
    }

    const int nb = 6 * n;
    m.boundary = ring[n];
    m.boundary_theta.resize(nb);
    for (int j = 0; j < nb; ++j) m.boundary_theta[j] = 2.0 * kPi * j / nb;

    if (domain.gamma0) {
        const ArcSpec& g0 = *domain.gamma0;
        if (g0.full) throw ConfigurationError("gamma0 cannot be the full circle: gamma must be nonempty");
        const double step = 2.0 * kPi / nb;
        const double ta = wrap_angle(g0.theta_a);
        const double tb = wrap_angle(g0.theta_b);
        const int ja = static_cast<int>(std::lround(ta / step)) % nb;
        const int jb = static_cast<int>(std::lround(tb / step)) % nb;
        if (ja == jb)
            throw ConfigurationError("resolution too coarse to separate gamma from gamma0 (arc endpoints share a vertex)");
        m.boundary_theta[ja] = ta;
        m.boundary_theta[jb] = tb;
        m.vertices[m.boundary[ja]] = std::polar(1.0, ta);
        m.vertices[m.boundary[jb]] = std::polar(1.0, tb);
    }

    m.boundary_arc.resize(nb);
    int gamma_count = 0;
    for (int j = 0; j < nb; ++j) {
        m.boundary_arc[j] = domain.in_gamma0(m.boundary_theta[j]) ? Arc::Gamma0 : Arc::Gamma;
        if (m.boundary_arc[j] == Arc::Gamma) ++gamma_count;
    }
    if (gamma_count == 0) throw ConfigurationError("resolution too coarse: no vertex left on gamma");

    const int nv = m.vertex_count();
    m.boundary_slot.assign(nv, -1);
    for (int j = 0; j < nb; ++j) m.boundary_slot[m.boundary[j]] = j;

    for (int c = 0; c < static_cast<int>(m.cells.size()); ++c)
        if (!(m.cell_area(c) > 0.0)) throw ConfigurationError("mesh generation produced a non-positive triangle");

    m.rho.resize(nv);
    for (int v = 0; v < nv; ++v) m.rho[v] = domain.rho(m.vertices[v]);

    m.area = RealVec::Zero(nv);
    m.neighbors.assign(nv, {});
    m.vertex_cells.assign(nv, {});
    std::vector<std::set<int>> nb_set(nv);
    for (int c = 0; c < static_cast<int>(m.cells.size()); ++c) {
        const auto& t = m.cells[c];
        const double a = m.cell_area(c);
        for (int q = 0; q < 3; ++q) {
            m.area[t[q]] += a / 3.0;
            m.vertex_cells[t[q]].push_back(c);
            nb_set[t[q]].insert(t[(q + 1) % 3]);
            nb_set[t[q]].insert(t[(q + 2) % 3]);
        }
    }
    for (int v = 0; v < nv; ++v) m.neighbors[v].assign(nb_set[v].begin(), nb_set[v].end());
    m.mass = (2.0 * m.rho.array()).exp() * m.area.array();

    m.boundary_weight.resize(nb);
    for (int j = 0; j < nb; ++j) {
        const double prev = wrap_angle(m.boundary_theta[j] - m.boundary_theta[(j + nb - 1) % nb]);
        const double next = wrap_angle(m.boundary_theta[(j + 1) % nb] - m.boundary_theta[j]);
        m.boundary_weight[j] = std::exp(m.rho[m.boundary[j]]) * 0.5 * (prev + next);
    }
    return m;
}

cplx interior_integral(const Mesh& mesh, const CplxVec& f) {
    return (mesh.mass.cast<cplx>().array() * f.array()).sum();
}

double interior_integral(const Mesh& mesh, const RealVec& f) {
    return mesh.mass.dot(f);
}

BoundaryIntegral boundary_integral(const Mesh& mesh, const CplxVec& trace, Arc arc) {
    BoundaryIntegral out;
    const int nb = mesh.boundary_count();
    if (trace.size() != nb) throw PreconditionError("boundary trace size does not match the boundary vertex count");
    if (arc == Arc::Gamma0 && !mesh.domain.has_gamma0()) {
        out.empty_arc = true;
        return out;
    }
    bool any = false;
    for (int j = 0; j < nb; ++j) {
        const int k = (j + 1) % nb;
        const double dt = wrap_angle(mesh.boundary_theta[k] - mesh.boundary_theta[j]);
        Arc seg = Arc::Gamma;
        if (mesh.boundary_arc[j] == Arc::Gamma0 && mesh.boundary_arc[k] == Arc::Gamma0 &&
            mesh.domain.in_gamma0(mesh.boundary_theta[j] + 0.5 * dt))
            seg = Arc::Gamma0;
        if (arc != Arc::Full && seg != arc) continue;
        any = true;
        const double ej = std::exp(mesh.rho[mesh.boundary[j]]);
        const double ek = std::exp(mesh.rho[mesh.boundary[k]]);
        out.value += 0.5 * dt * (ej * trace[j] + ek * trace[k]);
    }
    out.empty_arc = !any;
    return out;
}

JetOperator::JetOperator(const Mesh& mesh) : rows_(mesh.vertex_count()) {
    const int nv = mesh.vertex_count();
    for (int v = 0; v < nv; ++v) {
        std::set<int> st{v};
        for (int a : mesh.neighbors[v]) {
            st.insert(a);
            for (int b : mesh.neighbors[a]) st.insert(b);
        }
        std::vector<int> pts(st.begin(), st.end());
        const cplx z0 = mesh.vertices[v];
        double scale = 0.0;
        for (int a : mesh.neighbors[v]) scale += std::abs(mesh.vertices[a] - z0);
        scale /= std::max<std::size_t>(1, mesh.neighbors[v].size());
        Eigen::MatrixXd X(pts.size(), 6);
        for (std::size_t r = 0; r < pts.size(); ++r) {
            const cplx d = (mesh.vertices[pts[r]] - z0) / scale;
            const double x = d.real(), y = d.imag();
            X.row(r) << 1.0, x, y, x * x, x * y, y * y;
        }
        const Eigen::MatrixXd P = X.completeOrthogonalDecomposition().pseudoInverse();
        const double s1 = 1.0 / scale, s2 = s1 * s1;
        for (std::size_t r = 0; r < pts.size(); ++r) {
            Row row{pts[r], {P(0, r), P(1, r) * s1, P(2, r) * s1, 2.0 * P(3, r) * s2, P(4, r) * s2,
                             2.0 * P(5, r) * s2}};
            rows_[v].push_back(row);
        }
    }
}

Jet JetOperator::at(const CplxVec& u, int v) const {
    std::array<cplx, 6> acc{};
    for (const auto& row : rows_[v])
        for (int q = 0; q < 6; ++q) acc[q] += row.w[q] * u[row.vertex];
    return {acc[0], acc[1], acc[2], acc[3], acc[4], acc[5]};
}

std::vector<Jet> JetOperator::all(const CplxVec& u) const {
    std::vector<Jet> out(rows_.size());
    for (std::size_t v = 0; v < rows_.size(); ++v) out[v] = at(u, static_cast<int>(v));
    return out;
}

CplxVec normal_derivative_trace(const Mesh& mesh, const CplxVec& u) {
    const JetOperator jets(mesh);
    const int nb = mesh.boundary_count();
    CplxVec out(nb);
    for (int j = 0; j < nb; ++j) {
        const int v = mesh.boundary[j];
        const Jet J = jets.at(u, v);
        const double t = mesh.boundary_theta[j];
        out[j] = std::exp(-mesh.rho[v]) * (J.dx * std::cos(t) + J.dy * std::sin(t));
    }
    return out;
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
    grid_ = std::max(4, 2 * mesh.rings);
    cell_ = 2.2 / grid_;
    buckets_.assign(static_cast<std::size_t>(grid_) * grid_, {});
    auto index = [&](double x) { return std::clamp(static_cast<int>((x + 1.1) / cell_), 0, grid_ - 1); };
    for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
        double x0 = 9, x1 = -9, y0 = 9, y1 = -9;
        for (int v : mesh.cells[c]) {
            const cplx z = mesh.vertices[v];
            x0 = std::min(x0, z.real());
            x1 = std::max(x1, z.real());
            y0 = std::min(y0, z.imag());
            y1 = std::max(y1, z.imag());
        }
        for (int i = index(x0); i <= index(x1); ++i)
            for (int j = index(y0); j <= index(y1); ++j) buckets_[i * grid_ + j].push_back(c);
    }
}

std::pair<int, std::array<double, 3>> PointLocator::locate(cplx z) const {
    const Mesh& m = *mesh_;
    auto bary = [&](int c) {
        const auto& t = m.cells[c];
        const cplx a = m.vertices[t[0]], b = m.vertices[t[1]], d = m.vertices[t[2]];
        const double A = signed_area(a, b, d);
        return std::array<double, 3>{signed_area(z, b, d) / A, signed_area(a, z, d) / A, signed_area(a, b, z) / A};
    };
    const int ci = std::clamp(static_cast<int>((z.real() + 1.1) / cell_), 0, grid_ - 1);
    const int cj = std::clamp(static_cast<int>((z.imag() + 1.1) / cell_), 0, grid_ - 1);
    int best = -1;
    double best_min = -1e300;
    std::array<double, 3> best_l{};
    for (int ring = 0; ring <= 2; ++ring) {
        for (int i = ci - ring; i <= ci + ring; ++i) {
            for (int j = cj - ring; j <= cj + ring; ++j) {
                if (i < 0 || j < 0 || i >= grid_ || j >= grid_) continue;
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                for (int c : buckets_[i * grid_ + j]) {
                    const auto l = bary(c);
                    const double mn = std::min({l[0], l[1], l[2]});
                    if (mn >= -1e-12) return {c, l};
                    if (mn > best_min) {
                        best_min = mn;
                        best = c;
                        best_l = l;
                    }
                }
            }
        }
        if (best >= 0 && ring >= 1) break;
    }
    if (best < 0) throw PreconditionError("point lies outside the meshed disk");
    double s = 0.0;
    for (double& l : best_l) {
        l = std::max(l, 0.0);
        s += l;
    }
    for (double& l : best_l) l /= s;
    return {best, best_l};
}

cplx PointLocator::interpolate(const CplxVec& f, cplx z) const {
    const auto [c, l] = locate(z);
    const auto& t = mesh_->cells[c];
    return l[0] * f[t[0]] + l[1] * f[t[1]] + l[2] * f[t[2]];
}

CplxVec sample(const Mesh& mesh, const std::function<cplx(cplx)>& f) {
    CplxVec out(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) out[v] = f(mesh.vertices[v]);
    return out;
}

RealVec sample_real(const Mesh& mesh, const std::function<double(cplx)>& f) {
    RealVec out(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) out[v] = f(mesh.vertices[v]);
    return out;
}

CplxVec boundary_values(const Mesh& mesh, const CplxVec& u) {
    CplxVec out(mesh.boundary_count());
    for (int j = 0; j < mesh.boundary_count(); ++j) out[j] = u[mesh.boundary[j]];
    return out;
}

void write_mesh_csv(const Mesh& mesh, std::ostream& vertices_out, std::ostream& cells_out) {
    vertices_out.precision(17);
    vertices_out << "index,x,y,rho,boundary_arc\n";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const int slot = mesh.boundary_slot[v];
        vertices_out << v << ',' << mesh.vertices[v].real() << ',' << mesh.vertices[v].imag() << ','
                     << mesh.rho[v] << ',' << (slot < 0 ? "interior" : arc_name(mesh.boundary_arc[slot])) << '\n';
    }
    cells_out << "index,v0,v1,v2\n";
    for (std::size_t c = 0; c < mesh.cells.size(); ++c)
        cells_out << c << ',' << mesh.cells[c][0] << ',' << mesh.cells[c][1] << ',' << mesh.cells[c][2] << '\n';
}

}  // namespace calderon
