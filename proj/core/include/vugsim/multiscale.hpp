#pragma once

#include "vugsim/assembly.hpp"
#include "vugsim/geometry.hpp"
#include "vugsim/linalg.hpp"

#include <optional>
#include <vector>

namespace vugsim {

/// Offline operators on one neighborhood (alpha frozen at 1/mu):
/// `energy` is a_omega (matrix/fracture stiffness plus exchange), `weight` is s_omega.
struct LocalOperators {
    Region region;
    SparseMatrix energy;
    SparseMatrix weight;
};

LocalOperators assemble_local(const FineMesh& mesh, const Medium& medium, const CoarseNeighborhood& nb);

/// Coupled harmonic extensions of unit boundary data, one column per (boundary node k, direction s).
/// Columns live on the local submesh in region DOF layout.
struct SnapshotSpace {
    Index neighborhood = -1;
    std::vector<Index> boundary_local;  ///< local ids of the boundary nodes, ordered by global id
    DenseMatrix columns;

    Index size() const { return columns.cols(); }
    static Index column(Index boundary_index, int direction) { return kContinua * boundary_index + direction; }
};

SnapshotSpace solve_snapshots(const CoarseNeighborhood& nb, const LocalOperators& ops);
SnapshotSpace solve_snapshots(const FineMesh& mesh, const Medium& medium, const CoarseNeighborhood& nb);

/// Spectral decomposition of the snapshot space: all eigenvalues (ascending) and the leading
/// eigenfunctions on the local submesh, s_omega-orthonormal.
struct LocalSpectrum {
    Index neighborhood = -1;
    Vector eigenvalues;
    DenseMatrix eigenfunctions;  ///< local fine fields, one column per retained pair
    DenseMatrix projected_energy;  ///< Phi^T a_omega Phi
    DenseMatrix projected_weight;  ///< Phi^T s_omega Phi
};

/// Solves a_omega(psi, v) = lambda s_omega(psi, v) on the snapshot span and keeps `count` pairs.
/// Throws ValidationError if `count` exceeds the snapshot dimension.
LocalSpectrum local_spectral(const CoarseNeighborhood& nb, const SnapshotSpace& snapshots, const LocalOperators& ops,
                             Index count);

struct BasisSelection {
    Index count = 8;                             ///< uniform L_omega
    std::optional<double> eigenvalue_threshold;  ///< if set, L_omega = #{lambda < threshold}, at least 1
};

/// Coarse space as a prolongation from coarse coefficients to coupled fine fields.
struct MultiscaleSpace {
    SparseMatrix prolongation;          ///< 3n x dim
    std::vector<Index> counts;          ///< L_omega per coarse node
    std::vector<Index> offsets;         ///< first column of each neighborhood
    std::vector<Vector> eigenvalues;    ///< per neighborhood, empty for MsFEM
    double lambda = 0.0;                ///< min over neighborhoods of lambda_{L+1}; NaN when unavailable

    Index dim() const { return prolongation.cols(); }
    Index fine_size() const { return prolongation.rows(); }
};

MultiscaleSpace build_space(const CoarseGrid& grid, const std::vector<LocalSpectrum>& spectra,
                            const std::vector<Vector>& chi, const BasisSelection& selection);

/// Offline stage for every neighborhood: snapshots and spectra keeping `max_count` eigenfunctions.
std::vector<LocalSpectrum> compute_spectra(const CoarseGrid& grid, const Medium& medium, Index max_count);

/// Convenience: offline stage plus build_space.
MultiscaleSpace gmsfem_space(const CoarseGrid& grid, const Medium& medium, const BasisSelection& selection);

/// Baseline: one coupled harmonic basis per coarse node per continuum, with bilinear-hat boundary data on
/// every coarse block.
MultiscaleSpace msfem_space(const CoarseGrid& grid, const Medium& medium);

DenseMatrix galerkin_project(const SparseMatrix& prolongation, const SparseMatrix& op);
Vector galerkin_project(const SparseMatrix& prolongation, const Vector& load);

Vector downscale(const MultiscaleSpace& space, const Vector& coefficients);

/// Copy of the prolongation with rows of fixed DOFs zeroed, so every basis vanishes on the Dirichlet set.
SparseMatrix mask_rows(const SparseMatrix& prolongation, const DofMap& dofs);

}  // namespace vugsim
