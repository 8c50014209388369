#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "calderon/types.hpp"

namespace calderon {

enum class Arc { Gamma, Gamma0, Full };

const char* arc_name(Arc arc);

// Boundary arc [theta_a, theta_b] traversed counterclockwise.
struct ArcSpec {
    double theta_a = 0.0;
    double theta_b = 0.0;
    bool full = false;

    bool contains(double theta, double tol = 1e-12) const;
    double length() const;
};

struct DiskDomain {
    // log of the conformal factor: g = e^{2 rho} |dz|^2
    std::function<double(cplx)> rho = [](cplx) { return 0.0; };
    std::optional<ArcSpec> gamma0;

    bool has_gamma0() const { return gamma0.has_value(); }
    bool in_gamma0(double theta) const;
};

struct Mesh {
    DiskDomain domain;
    int rings = 0;
    double resolution = 0.0;

    std::vector<cplx> vertices;
    std::vector<std::array<int, 3>> cells;

    // counterclockwise boundary loop
    std::vector<int> boundary;
    std::vector<double> boundary_theta;
    std::vector<Arc> boundary_arc;
    std::vector<int> boundary_slot;  // vertex -> position in boundary, -1 inside

    RealVec rho;
    RealVec area;             // lumped Euclidean vertex area
    RealVec mass;             // e^{2 rho} * area
    RealVec boundary_weight;  // e^{rho} * (dtheta_prev + dtheta_next) / 2

    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<int>> vertex_cells;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int boundary_count() const { return static_cast<int>(boundary.size()); }
    bool is_boundary(int v) const { return boundary_slot[v] >= 0; }
    double cell_area(int c) const;
    std::vector<int> boundary_on(Arc arc) const;
};

Mesh build_disk_mesh(double resolution, const DiskDomain& domain);

cplx interior_integral(const Mesh& mesh, const CplxVec& f);
double interior_integral(const Mesh& mesh, const RealVec& f);

struct BoundaryIntegral {
    cplx value{0.0, 0.0};
    bool empty_arc = false;
};

// trace holds one value per boundary vertex, in boundary order.
BoundaryIntegral boundary_integral(const Mesh& mesh, const CplxVec& trace, Arc arc);

// Quadratic least-squares jet of a nodal field at every vertex.
struct Jet {
    cplx value, dx, dy, dxx, dxy, dyy;

    cplx dz() const { return 0.5 * (dx - kI * dy); }
    cplx dzbar() const { return 0.5 * (dx + kI * dy); }
    cplx dzz() const { return 0.25 * (dxx - dyy - 2.0 * kI * dxy); }
    cplx laplacian() const { return dxx + dyy; }
};

class JetOperator {
public:
    explicit JetOperator(const Mesh& mesh);
    Jet at(const CplxVec& u, int v) const;
    std::vector<Jet> all(const CplxVec& u) const;

private:
    struct Row {
        int vertex;
        std::array<double, 6> w;
    };
    std::vector<std::vector<Row>> rows_;
};

// d_nu u in the metric, exterior normal, on every boundary vertex.
CplxVec normal_derivative_trace(const Mesh& mesh, const CplxVec& u);

class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh);
    // cell and barycentric coordinates; points outside the polygon snap to the nearest cell
    std::pair<int, std::array<double, 3>> locate(cplx z) const;
    cplx interpolate(const CplxVec& f, cplx z) const;

private:
    const Mesh* mesh_;
    int grid_;
    double cell_;
    std::vector<std::vector<int>> buckets_;
};

CplxVec sample(const Mesh& mesh, const std::function<cplx(cplx)>& f);
RealVec sample_real(const Mesh& mesh, const std::function<double(cplx)>& f);
CplxVec boundary_values(const Mesh& mesh, const CplxVec& u);

void write_mesh_csv(const Mesh& mesh, std::ostream& vertices_out, std::ostream& cells_out);

}  // namespace calderon
