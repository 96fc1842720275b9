#include "vugsim/multiscale.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace vugsim {

namespace {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads; rethrows the first failure.
template <typename Fn>
void parallel_for(Index n, Fn&& fn)
{
    const auto workers = static_cast<Index>(std::max(1u, std::thread::hardware_concurrency()));
    if (workers == 1 || n <= 1) {
        for (Index i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (Index w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (Index i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Splits region DOFs into boundary (all continua at the listed nodes) and interior.
struct DofSplit {
    std::vector<Index> interior;
    std::vector<Index> boundary_dof_to_interior;  // region dof -> interior index or -1
};

DofSplit split_dofs(Index num_nodes, const std::vector<char>& is_boundary_node)
{
    DofSplit split;
    split.boundary_dof_to_interior.assign(static_cast<std::size_t>(kContinua * num_nodes), -1);
    for (int c = 0; c < kContinua; ++c) {
        for (Index v = 0; v < num_nodes; ++v) {
            if (!is_boundary_node[static_cast<std::size_t>(v)]) {
                const Index d = c * num_nodes + v;
                split.boundary_dof_to_interior[static_cast<std::size_t>(d)] = static_cast<Index>(split.interior.size());
                split.interior.push_back(d);
            }
        }
    }
    return split;
}

/// Harmonic extension of each column of `boundary_values` (region-layout vectors that are nonzero only
/// at boundary nodes) through the operator restricted to interior DOFs.
DenseMatrix harmonic_extension(const SparseMatrix& op, const DofSplit& split, const DenseMatrix& boundary_values)
{
    const auto ni = static_cast<Index>(split.interior.size());
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(op.nonZeros()));
    for (Index col = 0; col < op.outerSize(); ++col) {
        const Index ic = split.boundary_dof_to_interior[static_cast<std::size_t>(col)];
        if (ic < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(op, col); it; ++it) {
            const Index ir = split.boundary_dof_to_interior[static_cast<std::size_t>(it.row())];
            if (ir >= 0) {
                trip.emplace_back(ir, ic, it.value());
            }
        }
    }
    SparseMatrix a_ii(ni, ni);
    a_ii.setFromTriplets(trip.begin(), trip.end());
    a_ii.makeCompressed();

    const DenseMatrix coupled = op * boundary_values;
    DenseMatrix rhs(ni, boundary_values.cols());
    for (Index k = 0; k < ni; ++k) {
        rhs.row(k) = -coupled.row(split.interior[static_cast<std::size_t>(k)]);
    }
    DenseMatrix out = boundary_values;
    if (ni > 0) {
        const SparseCholesky chol(a_ii);
        const DenseMatrix x = chol.solve(rhs);
        for (Index k = 0; k < ni; ++k) {
            out.row(split.interior[static_cast<std::size_t>(k)]) = x.row(k);
        }
    }
    return out;
}

}  // namespace

LocalOperators assemble_local(const FineMesh& mesh, const Medium& medium, const CoarseNeighborhood& nb)
{
    LocalOperators ops;
    ops.region = Region::of(nb);
    ops.energy = assemble_reference_stiffness(mesh, medium, ops.region) +
                 assemble_exchange(mesh, medium.exchange, ops.region);
    ops.weight = assemble_spectral_weight(mesh, medium, ops.region);
    return ops;
}

SnapshotSpace solve_snapshots(const CoarseNeighborhood& nb, const LocalOperators& ops)
{
    const Index n = nb.num_nodes();
    std::vector<char> is_boundary(static_cast<std::size_t>(n), 0);
    SnapshotSpace snap;
    snap.neighborhood = nb.center;
    for (Index g : nb.boundary_nodes) {
        const Index l = nb.local(g);
        is_boundary[static_cast<std::size_t>(l)] = 1;
        snap.boundary_local.push_back(l);
    }
    const auto nb_count = static_cast<Index>(snap.boundary_local.size());
    DenseMatrix delta = DenseMatrix::Zero(kContinua * n, kContinua * nb_count);
    for (Index k = 0; k < nb_count; ++k) {
        for (int s = 0; s < kContinua; ++s) {
            delta(s * n + snap.boundary_local[static_cast<std::size_t>(k)], SnapshotSpace::column(k, s)) = 1.0;
        }
    }
    const DofSplit split = split_dofs(n, is_boundary);
    try {
        snap.columns = harmonic_extension(ops.energy, split, delta);
    } catch (const NumericalError& e) {
        throw NumericalError("snapshot system of neighborhood " + std::to_string(nb.center) +
                             " is singular (disconnected submesh or zero exchange?): " + e.what());
    }
    return snap;
}

SnapshotSpace solve_snapshots(const FineMesh& mesh, const Medium& medium, const CoarseNeighborhood& nb)
{
    return solve_snapshots(nb, assemble_local(mesh, medium, nb));
}

LocalSpectrum local_spectral(const CoarseNeighborhood& nb, const SnapshotSpace& snapshots, const LocalOperators& ops,
                             Index count)
{
    const Index dim = snapshots.size();
    if (count > dim || count < 0) {
        throw ValidationError("requested " + std::to_string(count) + " eigenfunctions but neighborhood " +
                              std::to_string(nb.center) + " has snapshot dimension " + std::to_string(dim));
    }
    const DenseMatrix& phi = snapshots.columns;
    LocalSpectrum out;
    out.neighborhood = nb.center;
    DenseMatrix a = phi.transpose() * (ops.energy * phi);
    DenseMatrix s = phi.transpose() * (ops.weight * phi);
    out.projected_energy = 0.5 * (a + a.transpose());
    out.projected_weight = 0.5 * (s + s.transpose());
    const EigenDecomposition eig = gen_eig_sym_filtered(out.projected_energy, out.projected_weight);
    if (count > eig.size()) {
        throw NumericalError("neighborhood " + std::to_string(nb.center) + ": only " + std::to_string(eig.size()) +
                             " well-conditioned snapshot directions for " + std::to_string(count) + " requested");
    }
    out.eigenvalues = eig.values;
    out.eigenfunctions = phi * eig.vectors.leftCols(count);
    return out;
}

std::vector<LocalSpectrum> compute_spectra(const CoarseGrid& grid, const Medium& medium, Index max_count)
{
    std::vector<LocalSpectrum> spectra(static_cast<std::size_t>(grid.num_nodes()));
    parallel_for(grid.num_nodes(), [&](Index i) {
        const CoarseNeighborhood nb = neighborhood(grid, i);
        const LocalOperators ops = assemble_local(grid.mesh(), medium, nb);
        const SnapshotSpace snap = solve_snapshots(nb, ops);
        spectra[static_cast<std::size_t>(i)] = local_spectral(nb, snap, ops, std::min(max_count, snap.size()));
        // Projected matrices are only needed for diagnostics.
        spectra[static_cast<std::size_t>(i)].projected_energy.resize(0, 0);
        spectra[static_cast<std::size_t>(i)].projected_weight.resize(0, 0);
    });
    return spectra;
}

MultiscaleSpace build_space(const CoarseGrid& grid, const std::vector<LocalSpectrum>& spectra,
                            const std::vector<Vector>& chi, const BasisSelection& selection)
{
    const FineMesh& mesh = grid.mesh();
    const Index n = mesh.num_nodes();
    require(static_cast<Index>(spectra.size()) == grid.num_nodes(), "build_space: one spectrum per coarse node");
    require(static_cast<Index>(chi.size()) == grid.num_nodes(), "build_space: one partition function per coarse node");
    require(selection.count >= 1, "basis count must be at least 1");

    MultiscaleSpace space;
    space.lambda = std::numeric_limits<double>::infinity();
    std::vector<Triplet> trip;
    Index col = 0;
    for (Index i = 0; i < grid.num_nodes(); ++i) {
        const LocalSpectrum& sp = spectra[static_cast<std::size_t>(i)];
        const Index available = sp.eigenfunctions.cols();
        Index count = selection.count;
        if (selection.eigenvalue_threshold) {
            count = 0;
            while (count < sp.eigenvalues.size() && sp.eigenvalues[count] < *selection.eigenvalue_threshold) {
                ++count;
            }
            count = std::clamp<Index>(count, 1, available);
        }
        if (count > available) {
            throw ValidationError("neighborhood " + std::to_string(i) + " has " + std::to_string(available) +
                                  " eigenfunctions, " + std::to_string(count) + " requested");
        }
        if (count < sp.eigenvalues.size()) {
            space.lambda = std::min(space.lambda, sp.eigenvalues[count]);
        }
        space.counts.push_back(count);
        space.offsets.push_back(col);
        space.eigenvalues.push_back(sp.eigenvalues);

        const CoarseNeighborhood nb = neighborhood(grid, i);
        const Index nl = nb.num_nodes();
        const Vector& weight = chi[static_cast<std::size_t>(i)];
        for (Index k = 0; k < count; ++k, ++col) {
            for (Index l = 0; l < nl; ++l) {
                const Index g = nb.local_to_global[static_cast<std::size_t>(l)];
                const double w = weight[g];
                if (w == 0.0) {
                    continue;
                }
                for (int c = 0; c < kContinua; ++c) {
                    const double v = w * sp.eigenfunctions(c * nl + l, k);
                    if (v != 0.0) {
                        trip.emplace_back(c * n + g, col, v);
                    }
                }
            }
        }
    }
    if (!std::isfinite(space.lambda)) {
        space.lambda = std::numeric_limits<double>::quiet_NaN();
    }
    space.prolongation.resize(kContinua * n, col);
    space.prolongation.setFromTriplets(trip.begin(), trip.end());
    space.prolongation.makeCompressed();
    return space;
}

MultiscaleSpace gmsfem_space(const CoarseGrid& grid, const Medium& medium, const BasisSelection& selection)
{
    Index max_count = selection.count;
    if (selection.eigenvalue_threshold) {
        max_count = std::numeric_limits<Index>::max();
    }
    const auto spectra = compute_spectra(grid, medium, max_count);
    return build_space(grid, spectra, partition_of_unity(grid), selection);
}

MultiscaleSpace msfem_space(const CoarseGrid& grid, const Medium& medium)
{
    const FineMesh& mesh = grid.mesh();
    const Index n = mesh.num_nodes();
    const Index rx = grid.ratio_x();
    const Index ry = grid.ratio_y();

    // Column of (coarse node, direction s).
    auto column = [](Index node, int s) { return kContinua * node + s; };
    std::vector<std::vector<Triplet>> block_trip(static_cast<std::size_t>(grid.num_blocks()));

    parallel_for(grid.num_blocks(), [&](Index block) {
        const Index BI = block % grid.mx();
        const Index BJ = block / grid.mx();
        const Index i0 = BI * rx;
        const Index j0 = BJ * ry;

        Region region;
        region.triangles = grid.block_triangles(block);
        region.global_to_local.assign(static_cast<std::size_t>(n), -1);
        std::vector<Index> local_to_global;
        std::vector<char> is_boundary;
        for (Index j = j0; j <= j0 + ry; ++j) {
            for (Index i = i0; i <= i0 + rx; ++i) {
                const Index g = mesh.lattice_node(i, j);
                region.global_to_local[static_cast<std::size_t>(g)] = static_cast<Index>(local_to_global.size());
                local_to_global.push_back(g);
                is_boundary.push_back(i == i0 || i == i0 + rx || j == j0 || j == j0 + ry ? 1 : 0);
            }
        }
        region.num_nodes = static_cast<Index>(local_to_global.size());
        const auto& chains = mesh.fracture_edges();
        for (std::size_t f = 0; f < chains.size(); ++f) {
            for (Index e : chains[f]) {
                const auto& ed = mesh.edge(e);
                const bool inside = (ed.triangles[0] >= 0 && grid.triangle_block(ed.triangles[0]) == block) ||
                                    (ed.triangles[1] >= 0 && grid.triangle_block(ed.triangles[1]) == block);
                if (inside) {
                    region.fracture_edges.push_back(e);
                    region.edge_fracture.push_back(static_cast<Index>(f));
                }
            }
        }
        const SparseMatrix op = assemble_reference_stiffness(mesh, medium, region) +
                                assemble_exchange(mesh, medium.exchange, region);

        const Index nl = region.num_nodes;
        // Boundary data: bilinear hat of each block corner restricted to the block boundary, per direction.
        DenseMatrix data = DenseMatrix::Zero(kContinua * nl, 4 * kContinua);
        for (Index l = 0; l < nl; ++l) {
            if (!is_boundary[static_cast<std::size_t>(l)]) {
                continue;
            }
            const double sx = static_cast<double>(l % (rx + 1)) / static_cast<double>(rx);
            const double sy = static_cast<double>(l / (rx + 1)) / static_cast<double>(ry);
            const double wx[2] = {1.0 - sx, sx};
            const double wy[2] = {1.0 - sy, sy};
            for (int b = 0; b < 2; ++b) {
                for (int a = 0; a < 2; ++a) {
                    for (int s = 0; s < kContinua; ++s) {
                        data(s * nl + l, (2 * b + a) * kContinua + s) = wx[a] * wy[b];
                    }
                }
            }
        }
        const DofSplit split = split_dofs(nl, is_boundary);
        const DenseMatrix basis = harmonic_extension(op, split, data);

        auto& trip = block_trip[static_cast<std::size_t>(block)];
        for (int b = 0; b < 2; ++b) {
            for (int a = 0; a < 2; ++a) {
                const Index node = grid.node_id(BI + a, BJ + b);
                for (int s = 0; s < kContinua; ++s) {
                    const Index src = (2 * b + a) * kContinua + s;
                    for (int c = 0; c < kContinua; ++c) {
                        for (Index l = 0; l < nl; ++l) {
                            const double v = basis(c * nl + l, src);
                            if (v == 0.0) {
                                continue;
                            }
                            const Index g = local_to_global[static_cast<std::size_t>(l)];
                            // Block-boundary nodes are shared; the hat data agrees there, so keep one copy.
                            if (is_boundary[static_cast<std::size_t>(l)]) {
                                const Index li = g % (mesh.nx() + 1);
                                const Index lj = g / (mesh.nx() + 1);
                                const bool owner = (li < i0 + rx || BI == grid.mx() - 1) &&
                                                   (lj < j0 + ry || BJ == grid.my() - 1);
                                if (!owner) {
                                    continue;
                                }
                            }
                            trip.emplace_back(c * n + g, column(node, s), v);
                        }
                    }
                }
            }
        }
    });

    std::vector<Triplet> all;
    for (auto& t : block_trip) {
        all.insert(all.end(), t.begin(), t.end());
    }
    MultiscaleSpace space;
    space.prolongation.resize(kContinua * n, kContinua * grid.num_nodes());
    space.prolongation.setFromTriplets(all.begin(), all.end());
    space.prolongation.makeCompressed();
    space.counts.assign(static_cast<std::size_t>(grid.num_nodes()), kContinua);
    for (Index i = 0; i < grid.num_nodes(); ++i) {
        space.offsets.push_back(kContinua * i);
    }
    space.eigenvalues.assign(static_cast<std::size_t>(grid.num_nodes()), Vector());
    space.lambda = std::numeric_limits<double>::quiet_NaN();
    return space;
}

DenseMatrix galerkin_project(const SparseMatrix& prolongation, const SparseMatrix& op)
{
    require(op.rows() == prolongation.rows() && op.cols() == prolongation.rows(), "galerkin_project: dimension mismatch");
    const SparseMatrix pt = prolongation.transpose();
    const SparseMatrix ap = op * prolongation;
    DenseMatrix coarse = DenseMatrix(pt * ap);
    return 0.5 * (coarse + coarse.transpose());
}

Vector galerkin_project(const SparseMatrix& prolongation, const Vector& load)
{
    require(load.size() == prolongation.rows(), "galerkin_project: dimension mismatch");
    return prolongation.transpose() * load;
}

Vector downscale(const MultiscaleSpace& space, const Vector& coefficients)
{
    if (coefficients.size() != space.dim()) {
        throw ValidationError("downscale: expected " + std::to_string(space.dim()) + " coefficients, got " +
                              std::to_string(coefficients.size()));
    }
    return space.prolongation * coefficients;
}

SparseMatrix mask_rows(const SparseMatrix& prolongation, const DofMap& dofs)
{
    SparseMatrix masked = prolongation;
    for (Index col = 0; col < masked.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(masked, col); it; ++it) {
            if (dofs.is_fixed(it.row())) {
                it.valueRef() = 0.0;
            }
        }
    }
    masked.prune(0.0);
    return masked;
}

}  // namespace vugsim
