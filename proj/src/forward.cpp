#include "calderon/forward.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace calderon {

SparseMatrix assemble_stiffness(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.cells.size() * 9);
    for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
        const auto& t = mesh.cells[c];
        const double area = mesh.cell_area(c);
        const cplx e[3] = {mesh.vertices[t[2]] - mesh.vertices[t[1]], mesh.vertices[t[0]] - mesh.vertices[t[2]],
                           mesh.vertices[t[1]] - mesh.vertices[t[0]]};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trip.emplace_back(t[a], t[b], std::real(std::conj(e[a]) * e[b]) / (4.0 * area));
    }
    SparseMatrix K(mesh.vertex_count(), mesh.vertex_count());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

CplxVec BoundaryTraces::dirichlet_values() const {
    if (log_scale.size() == 0) return dirichlet;
    return dirichlet.array() * log_scale.array().exp().cast<cplx>();
}

CplxVec BoundaryTraces::neumann_values() const {
    if (log_scale.size() == 0) return neumann;
    return neumann.array() * log_scale.array().exp().cast<cplx>();
}

SchrodingerSystem::SchrodingerSystem(const Mesh& mesh, const RealVec& potential, std::string name)
    : mesh_(&mesh), V_(potential), name_(std::move(name)) {
    if (potential.size() != mesh.vertex_count()) throw PreconditionError("potential size does not match the mesh");
    K_ = assemble_stiffness(mesh);
    SparseMatrix MV(mesh.vertex_count(), mesh.vertex_count());
    MV.reserve(Eigen::VectorXi::Constant(mesh.vertex_count(), 1));
    for (int v = 0; v < mesh.vertex_count(); ++v) MV.insert(v, v) = mesh.mass[v] * V_[v];
    A_ = K_ + MV;

    interior_slot_.assign(mesh.vertex_count(), -1);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!mesh.is_boundary(v)) {
            interior_slot_[v] = static_cast<int>(interior_.size());
            interior_.push_back(v);
        }
    const int ni = static_cast<int>(interior_.size());
    std::vector<Eigen::Triplet<double>> tii, tib;
    for (int k = 0; k < A_.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
            const int r = interior_slot_[it.row()];
            if (r < 0) continue;
            const int c = interior_slot_[it.col()];
            if (c >= 0)
                tii.emplace_back(r, c, it.value());
            else
                tib.emplace_back(r, mesh.boundary_slot[it.col()], it.value());
        }
    A_ii_.resize(ni, ni);
    A_ii_.setFromTriplets(tii.begin(), tii.end());
    A_ib_.resize(ni, mesh.boundary_count());
    A_ib_.setFromTriplets(tib.begin(), tib.end());

    if (ni > 0) {
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
        ldlt_->compute(A_ii_);
        bool singular = ldlt_->info() != Eigen::Success;
        if (!singular) {
            const RealVec d = ldlt_->vectorD().cwiseAbs();
            singular = !(d.minCoeff() > 1e-13 * d.maxCoeff());
        }
        if (!singular) {
            // inverse iteration bounds the smallest eigenvalue magnitude from above
            double scale = 0.0;
            for (int k = 0; k < A_ii_.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(A_ii_, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
            RealVec x(ni);
            for (int r = 0; r < ni; ++r) x[r] = 1.0 + 0.5 * std::sin(1.7 * r + 0.3);
            x.normalize();
            double estimate = scale;
            for (int it = 0; it < 4 && !singular; ++it) {
                RealVec y = ldlt_->solve(x);
                const double ny = y.norm();
                if (!std::isfinite(ny)) {
                    singular = true;
                    break;
                }
                estimate = std::min(estimate, 1.0 / ny);
                x = y / ny;
                singular = estimate < 1e-10 * scale;
            }
        }
        if (singular)
            throw SolverError("Dirichlet eigenvalue: the discrete operator with potential '" + name_ +
                              "' is singular or nearly singular");
    }
}

CplxVec SchrodingerSystem::solve(const CplxVec& boundary_data, const CplxVec* source) const {
    const Mesh& m = *mesh_;
    if (boundary_data.size() != m.boundary_count()) throw PreconditionError("boundary data size mismatch");
    const int ni = static_cast<int>(interior_.size());
    CplxVec rhs = -(A_ib_.cast<cplx>() * boundary_data);
    if (source)
        for (int r = 0; r < ni; ++r) rhs[r] += m.mass[interior_[r]] * (*source)[interior_[r]];
    CplxVec u(m.vertex_count());
    for (int j = 0; j < m.boundary_count(); ++j) u[m.boundary[j]] = boundary_data[j];
    if (ni > 0) {
        const RealVec xr = ldlt_->solve(RealVec(rhs.real()));
        const RealVec xi = ldlt_->solve(RealVec(rhs.imag()));
        for (int r = 0; r < ni; ++r) u[interior_[r]] = cplx(xr[r], xi[r]);
    }
    const double res = interior_residual(u, source);
    if (!(res <= 1e-10)) {
        std::ostringstream msg;
        msg << "linear solve with potential '" << name_ << "' left relative interior residual " << res;
        throw SolverError(msg.str());
    }
    return u;
}

double SchrodingerSystem::interior_residual(const CplxVec& u, const CplxVec* source) const {
    const CplxVec Au = A_.cast<cplx>() * u;
    double num = 0.0, den = 0.0;
    for (int v : interior_) {
        cplx r = Au[v];
        if (source) r -= mesh_->mass[v] * (*source)[v];
        num = std::max(num, std::abs(r));
    }
    for (int k = 0; k < A_.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A_, k); it; ++it) den = std::max(den, std::abs(it.value() * u[it.col()]));
    return den > 0.0 ? num / den : num;
}

CplxVec SchrodingerSystem::neumann(const CplxVec& u, const CplxVec* source) const {
    const Mesh& m = *mesh_;
    const CplxVec Au = A_.cast<cplx>() * u;
    CplxVec t(m.boundary_count());
    for (int j = 0; j < m.boundary_count(); ++j) {
        const int v = m.boundary[j];
        cplx r = Au[v];
        if (source) r -= m.mass[v] * (*source)[v];
        t[j] = r / m.boundary_weight[j];
    }
    return t;
}

BoundaryTraces SchrodingerSystem::traces(const CplxVec& u, const CplxVec* source) const {
    return {boundary_values(*mesh_, u), neumann(u, source), RealVec()};
}

CplxVec solve_schrodinger_dirichlet(const Mesh& mesh, const RealVec& V, const CplxVec& boundary_data,
                                    const std::string& name) {
    return SchrodingerSystem(mesh, V, name).solve(boundary_data);
}

CplxVec green_apply(const Mesh& mesh, const RealVec& V, const CplxVec& f) {
    return SchrodingerSystem(mesh, V).solve(CplxVec::Zero(mesh.boundary_count()), &f);
}

cplx boundary_pairing(const Mesh& mesh, const BoundaryTraces& u1, const BoundaryTraces& u2) {
    const int nb = mesh.boundary_count();
    if (u1.dirichlet.size() != nb || u2.dirichlet.size() != nb || u1.neumann.size() != nb || u2.neumann.size() != nb)
        throw PreconditionError("boundary_pairing needs traces on all boundary vertices");
    cplx s = 0.0;
    for (int j = 0; j < nb; ++j) {
        double scale = 0.0;
        if (u1.log_scale.size()) scale += u1.log_scale[j];
        if (u2.log_scale.size()) scale += u2.log_scale[j];
        const cplx term = u1.neumann[j] * u2.dirichlet[j] - u1.dirichlet[j] * u2.neumann[j];
        s += mesh.boundary_weight[j] * std::exp(scale) * term;
    }
    return s;
}

CauchyData partial_cauchy_data(const SchrodingerSystem& system, const CplxVec& f_on_gamma) {
    const Mesh& m = system.mesh();
    const std::vector<int> gamma = m.boundary_on(Arc::Gamma);
    if (f_on_gamma.size() != static_cast<int>(gamma.size()))
        throw PreconditionError("Dirichlet data must have one value per gamma vertex");
    CplxVec full = CplxVec::Zero(m.boundary_count());
    for (std::size_t k = 0; k < gamma.size(); ++k) full[gamma[k]] = f_on_gamma[k];
    const CplxVec u = system.solve(full);
    const CplxVec t = system.neumann(u);
    CauchyData d;
    d.dirichlet.resize(gamma.size());
    d.neumann.resize(gamma.size());
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        d.theta.push_back(m.boundary_theta[gamma[k]]);
        d.slots.push_back(gamma[k]);
        d.dirichlet[k] = f_on_gamma[k];
        d.neumann[k] = t[gamma[k]];
    }
    return d;
}

CauchyData partial_cauchy_data(const Mesh& mesh, const RealVec& V, const CplxVec& f_on_gamma) {
    return partial_cauchy_data(SchrodingerSystem(mesh, V), f_on_gamma);
}

void write_cauchy_csv(const CauchyData& data, std::ostream& out) {
    out.precision(17);
    out << "theta,dirichlet_re,dirichlet_im,neumann_re,neumann_im,arc_label\n";
    for (std::size_t k = 0; k < data.theta.size(); ++k)
        out << data.theta[k] << ',' << data.dirichlet[k].real() << ',' << data.dirichlet[k].imag() << ','
            << data.neumann[k].real() << ',' << data.neumann[k].imag() << ",gamma\n";
}

CauchyData read_cauchy_csv(std::istream& in) {
    CauchyData d;
    std::string line;
    if (!std::getline(in, line) || line.rfind("theta,", 0) != 0) throw ConfigurationError("Cauchy data CSV header missing");
    std::vector<cplx> dir, neu;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[5];
        for (double& x : v) {
            if (!std::getline(ss, cell, ',')) throw ConfigurationError("malformed Cauchy data row: " + line);
            x = std::stod(cell);
        }
        std::getline(ss, cell);
        if (cell != "gamma") continue;
        d.theta.push_back(v[0]);
        dir.emplace_back(v[1], v[2]);
        neu.emplace_back(v[3], v[4]);
    }
    d.dirichlet = Eigen::Map<CplxVec>(dir.data(), dir.size());
    d.neumann = Eigen::Map<CplxVec>(neu.data(), neu.size());
    return d;
}

void write_traces_csv(const Mesh& mesh, const BoundaryTraces& traces, std::ostream& out) {
    out.precision(17);
    const CplxVec f = traces.dirichlet_values();
    const CplxVec t = traces.neumann_values();
    out << "theta,dirichlet_re,dirichlet_im,neumann_re,neumann_im,arc_label\n";
    for (int j = 0; j < mesh.boundary_count(); ++j)
        out << mesh.boundary_theta[j] << ',' << f[j].real() << ',' << f[j].imag() << ',' << t[j].real() << ','
            << t[j].imag() << ',' << arc_name(mesh.boundary_arc[j]) << '\n';
}

}  // namespace calderon
