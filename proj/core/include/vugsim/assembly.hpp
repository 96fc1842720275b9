#pragma once

#include "vugsim/common.hpp"
#include "vugsim/geometry.hpp"
#include "vugsim/physics.hpp"

#include <array>
#include <map>
#include <vector>

namespace vugsim {

/// Everything the operators need besides the mesh.
struct Medium {
    FluidProperties fluid;
    std::array<ContinuumParams, kContinua> continua;
    FractureNetwork network;
    ExchangeTable exchange;
};

/// A set of triangles and fracture edges assembled onto a (possibly local) node numbering.
/// DOF layout: continuum * num_nodes + local node.
struct Region {
    std::vector<Index> triangles;
    std::vector<Index> fracture_edges;
    std::vector<Index> edge_fracture;    ///< fracture id per fracture edge
    std::vector<Index> global_to_local;  ///< empty means identity
    Index num_nodes = 0;

    Index local(Index global) const
    {
        return global_to_local.empty() ? global : global_to_local[static_cast<std::size_t>(global)];
    }
    Index num_dofs() const { return kContinua * num_nodes; }

    static Region whole(const FineMesh& mesh);
    static Region of(const CoarseNeighborhood& nb);
};

/// Product-space indexing plus the Dirichlet set.
class DofMap {
public:
    explicit DofMap(Index num_nodes) : num_nodes_(num_nodes) {}

    Index num_nodes() const { return num_nodes_; }
    Index size() const { return kContinua * num_nodes_; }
    Index dof(int continuum, Index node) const { return continuum * num_nodes_ + node; }

    void fix(Index dof, double value);
    void fix_node(Index node, double value);  ///< all three continua
    const std::map<Index, double>& dirichlet() const { return dirichlet_; }
    bool is_fixed(Index dof) const { return dirichlet_.count(dof) != 0; }
    std::vector<Index> free_dofs() const;

private:
    Index num_nodes_;
    std::map<Index, double> dirichlet_;
};

struct PointWell {
    Point location;
    double rate = 0.0;  ///< positive injects
    Continuum continuum = Continuum::Matrix;
};

/// Outward Darcy flux -(kappa/mu) du/dn = flux on one domain side.
struct NeumannFlux {
    unsigned side = kLeft;
    double flux = 0.0;
    std::array<bool, kContinua> continua{true, true, false};
};

struct SourceSpec {
    std::vector<PointWell> wells;
    std::array<std::vector<double>, kContinua> densities;  ///< per-triangle; empty means zero
    std::vector<NeumannFlux> neumann;
};

/// Operators of the coupled system on the fine grid. K depends on the lag field and is built on demand.
struct AssembledSystem {
    SparseMatrix mass;
    SparseMatrix exchange;
    Vector load;
};

/// b(u, v): consistent P1 storage over triangles plus aperture-weighted line storage on fracture edges,
/// for every continuum.
SparseMatrix assemble_mass(const FineMesh& mesh, const Medium& medium, const Region& region);
SparseMatrix assemble_mass(const FineMesh& mesh, const Medium& medium);

/// a(u, v; w) for the matrix and fracture continua with alpha evaluated at the lag field `w`
/// (region DOF layout). The vug block is empty.
SparseMatrix assemble_stiffness(const FineMesh& mesh, const Medium& medium, const Vector& lag, const Region& region);
SparseMatrix assemble_stiffness(const FineMesh& mesh, const Medium& medium, const Vector& lag);

/// Stiffness with alpha frozen at the reference pressure (alpha = 1/mu).
SparseMatrix assemble_reference_stiffness(const FineMesh& mesh, const Medium& medium, const Region& region);

/// q(u, v) with nodewise (lumped) quadrature.
SparseMatrix assemble_exchange(const FineMesh& mesh, const ExchangeTable& exchange, const Region& region);
SparseMatrix assemble_exchange(const FineMesh& mesh, const ExchangeTable& exchange);

/// (1/mu) sum_i int kappa^i u^i v^i, fracture edges weighted by aperture * kappa_F.
SparseMatrix assemble_spectral_weight(const FineMesh& mesh, const Medium& medium, const Region& region);

/// Consistent P1 load from point wells, triangle densities and Neumann fluxes.
Vector assemble_load(const FineMesh& mesh, const SourceSpec& sources);

/// Triangle containing p together with its barycentric weights.
struct Location {
    Index triangle = -1;
    std::array<double, 3> weights{};
};
Location locate(const FineMesh& mesh, const Point& p);

/// System with Dirichlet DOFs eliminated symmetrically; their contribution is moved to the RHS.
struct ReducedSystem {
    SparseMatrix matrix;
    Vector rhs;
    std::vector<Index> free;      ///< reduced index -> full DOF
    std::vector<Index> full_to_free;  ///< full DOF -> reduced index or -1
    Vector lifting;               ///< full-length: Dirichlet values, zero elsewhere

    Vector expand(const Vector& reduced) const;
    Vector restrict(const Vector& full) const;
};

ReducedSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs, const DofMap& dofs);

/// Dirichlet set from per-side values: every node on a flagged side, all continua.
DofMap dirichlet_from_sides(const FineMesh& mesh, const std::map<unsigned, double>& side_values);

/// Total storage 1^T M u.
double total_mass(const SparseMatrix& mass, const Vector& u);

}  // namespace vugsim
