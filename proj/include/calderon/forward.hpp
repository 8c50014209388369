#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "calderon/geometry.hpp"

namespace calderon {

using SparseMatrix = Eigen::SparseMatrix<double>;

// P1 stiffness of the Euclidean Dirichlet form; conformally invariant, so independent of rho.
SparseMatrix assemble_stiffness(const Mesh& mesh);

// Boundary traces on every boundary vertex. Stored values are scaled by
// exp(log_scale) per vertex (log_scale empty means no scaling), which keeps
// exponentially large CGO traces representable.
struct BoundaryTraces {
    CplxVec dirichlet;
    CplxVec neumann;
    RealVec log_scale;

    CplxVec dirichlet_values() const;
    CplxVec neumann_values() const;
};

// Discrete operator K + M V with the interior block factorised once.
class SchrodingerSystem {
public:
    SchrodingerSystem(const Mesh& mesh, const RealVec& potential, std::string name = "V");

    const Mesh& mesh() const { return *mesh_; }
    const SparseMatrix& matrix() const { return A_; }
    const SparseMatrix& stiffness() const { return K_; }
    const RealVec& potential() const { return V_; }
    const std::string& name() const { return name_; }
    const std::vector<int>& interior() const { return interior_; }

    // u = boundary_data on the boundary, (Delta_g + V) u = source inside
    CplxVec solve(const CplxVec& boundary_data, const CplxVec* source = nullptr) const;
    // weak-form flux (K + M V) u - M source on boundary rows divided by the boundary weight
    CplxVec neumann(const CplxVec& u, const CplxVec* source = nullptr) const;
    BoundaryTraces traces(const CplxVec& u, const CplxVec* source = nullptr) const;
    double interior_residual(const CplxVec& u, const CplxVec* source = nullptr) const;

private:
    const Mesh* mesh_;
    RealVec V_;
    std::string name_;
    SparseMatrix K_;
    SparseMatrix A_;
    SparseMatrix A_ii_;
    SparseMatrix A_ib_;
    std::vector<int> interior_;
    std::vector<int> interior_slot_;
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

CplxVec solve_schrodinger_dirichlet(const Mesh& mesh, const RealVec& V, const CplxVec& boundary_data,
                                    const std::string& name = "V");
CplxVec green_apply(const Mesh& mesh, const RealVec& V, const CplxVec& f);

// integral over the boundary of (d_nu u1 f2 - f1 d_nu u2), exterior normal;
// equals the integral of u1 (V1 - V2) u2 dv_g for discrete solutions.
cplx boundary_pairing(const Mesh& mesh, const BoundaryTraces& u1, const BoundaryTraces& u2);

struct CauchyData {
    std::vector<double> theta;
    std::vector<int> slots;  // positions in the boundary loop
    CplxVec dirichlet;
    CplxVec neumann;
};

CauchyData partial_cauchy_data(const SchrodingerSystem& system, const CplxVec& f_on_gamma);
CauchyData partial_cauchy_data(const Mesh& mesh, const RealVec& V, const CplxVec& f_on_gamma);

void write_cauchy_csv(const CauchyData& data, std::ostream& out);
CauchyData read_cauchy_csv(std::istream& in);
void write_traces_csv(const Mesh& mesh, const BoundaryTraces& traces, std::ostream& out);

}  // namespace calderon
