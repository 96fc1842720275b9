#include "toy.hpp"

#include "vugsim/multiscale.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace vugsim;

namespace {

struct Toy {
    std::shared_ptr<const FineMesh> mesh;
    std::shared_ptr<const CoarseGrid> grid;
    Medium medium;
};

Toy make_toy(Index n, Index m, bool fracture = true)
{
    FractureNetwork net;
    if (fracture) {
        net.fractures.push_back(toy::segment({0.125, 0.375}, {0.875, 0.625}));
    }
    Toy t;
    t.mesh = toy::unit_mesh(n, n, net);
    t.grid = std::make_shared<const CoarseGrid>(t.mesh, m, m);
    t.medium = toy::constant_medium(*t.mesh, {1e-14, 1e-12, 1e-13}, {0.2, 0.01, 0.1}, {}, net);
    // Heterogeneous matrix so the spectra are not degenerate.
    t.medium.continua[0] = ContinuumParams(Continuum::Matrix, 0.2, synth_permeability(5, n, n, 100.0, 1e-14),
                                           t.medium.fluid);
    t.medium.exchange = exchange_coefficients(t.medium.continua, shape_factor_from_mesh(t.mesh->h_min()),
                                              t.medium.fluid.viscosity);
    return t;
}

SparseMatrix global_energy(const Toy& t)
{
    const Region whole = Region::whole(*t.mesh);
    return SparseMatrix(assemble_reference_stiffness(*t.mesh, t.medium, whole) +
                        assemble_exchange(*t.mesh, t.medium.exchange, whole));
}

Index rank_of(const DenseMatrix& a)
{
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(a);
    qr.setThreshold(1e-10);
    return qr.rank();
}

// Residual of the least-squares fit of `target` by the columns of `basis`, relative to |target|.
double fit_residual(const DenseMatrix& basis, const Vector& target)
{
    const Vector c = basis.colPivHouseholderQr().solve(target);
    return (basis * c - target).norm() / target.norm();
}

}  // namespace

TEST(Snapshots, DeltaBoundaryDataAndInteriorResidual)
{
    const Toy t = make_toy(8, 2);
    const SparseMatrix a = global_energy(t);
    const Index n = t.mesh->num_nodes();
    const auto nb = neighborhood(*t.grid, t.grid->node_id(1, 1));
    const auto snaps = solve_snapshots(*t.mesh, t.medium, nb);
    const Index nl = nb.num_nodes();
    const Index nbd = static_cast<Index>(nb.boundary_nodes.size());
    ASSERT_EQ(snaps.size(), 3 * nbd);
    for (Index k = 0; k < nbd; ++k) {
        for (int s = 0; s < kContinua; ++s) {
            const Vector col = snaps.columns.col(SnapshotSpace::column(k, s));
            for (Index k2 = 0; k2 < nbd; ++k2) {
                const Index l = nb.local(nb.boundary_nodes[static_cast<std::size_t>(k2)]);
                for (int c = 0; c < kContinua; ++c) {
                    EXPECT_EQ(col[c * nl + l], (k2 == k && c == s) ? 1.0 : 0.0);
                }
            }
            // Embed and apply the global operator; interior rows of omega must vanish.
            Vector u = Vector::Zero(3 * n);
            for (Index l = 0; l < nl; ++l) {
                for (int c = 0; c < kContinua; ++c) {
                    u[c * n + nb.local_to_global[static_cast<std::size_t>(l)]] = col[c * nl + l];
                }
            }
            const Vector r = a * u;
            double scale = 0.0;
            for (Index i = 0; i < r.size(); ++i) {
                scale = std::max(scale, std::abs(a.coeff(i, i)));
            }
            for (Index l = 0; l < nl; ++l) {
                const Index g = nb.local_to_global[static_cast<std::size_t>(l)];
                if (std::binary_search(nb.boundary_nodes.begin(), nb.boundary_nodes.end(), g)) {
                    continue;
                }
                for (int c = 0; c < kContinua; ++c) {
                    EXPECT_LE(std::abs(r[c * n + g]), 1e-9 * scale);
                }
            }
        }
    }
}

TEST(Snapshots, ColumnsSumToConstant)
{
    const Toy t = make_toy(8, 2);
    const auto nb = neighborhood(*t.grid, t.grid->node_id(0, 1));
    const auto snaps = solve_snapshots(*t.mesh, t.medium, nb);
    const Vector sum = snaps.columns.rowwise().sum();
    EXPECT_LT((sum - Vector::Ones(sum.size())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Spectral, SpectrumStartsAtZeroAndAscends)
{
    const Toy t = make_toy(8, 2);
    const auto nb = neighborhood(*t.grid, t.grid->node_id(1, 1));
    const auto ops = assemble_local(*t.mesh, t.medium, nb);
    const auto snaps = solve_snapshots(nb, ops);
    const auto spec = local_spectral(nb, snaps, ops, 4);
    ASSERT_GE(spec.eigenvalues.size(), 4);
    EXPECT_EQ(spec.eigenfunctions.cols(), 4);
    EXPECT_LT(std::abs(spec.eigenvalues[0]), 1e-8 * spec.eigenvalues[spec.eigenvalues.size() - 1]);
    for (Index i = 1; i < spec.eigenvalues.size(); ++i) {
        EXPECT_LE(spec.eigenvalues[i - 1], spec.eigenvalues[i]);
        EXPECT_GE(spec.eigenvalues[i], -1e-10 * spec.eigenvalues[spec.eigenvalues.size() - 1]);
    }
    // Eigenfunctions are s-orthonormal and satisfy the pencil within the snapshot span.
    const DenseMatrix s = DenseMatrix(ops.weight);
    const DenseMatrix a = DenseMatrix(ops.energy);
    const DenseMatrix& psi = spec.eigenfunctions;
    EXPECT_LT((psi.transpose() * s * psi - DenseMatrix::Identity(4, 4)).norm(), 1e-8);
    const DenseMatrix phi = snaps.columns;
    const DenseMatrix r = phi.transpose() * (a * psi - s * psi * spec.eigenvalues.head(4).asDiagonal());
    EXPECT_LT(r.norm(), 1e-8 * (phi.transpose() * a * psi).norm() + 1e-30);
}

TEST(Spectral, MatchesReferenceEigensolver)
{
    const Toy t = make_toy(4, 2, false);
    const auto nb = neighborhood(*t.grid, t.grid->node_id(0, 0));
    const auto ops = assemble_local(*t.mesh, t.medium, nb);
    const auto snaps = solve_snapshots(nb, ops);
    const DenseMatrix phi = snaps.columns;
    DenseMatrix ap = phi.transpose() * DenseMatrix(ops.energy) * phi;
    DenseMatrix sp = phi.transpose() * DenseMatrix(ops.weight) * phi;
    ap = 0.5 * (ap + ap.transpose()).eval();
    sp = 0.5 * (sp + sp.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> ref(ap, sp);
    ASSERT_EQ(ref.info(), Eigen::Success);
    const auto spec = local_spectral(nb, snaps, ops, 3);
    ASSERT_EQ(spec.eigenvalues.size(), ref.eigenvalues().size());
    const double top = ref.eigenvalues().maxCoeff();
    for (Index i = 0; i < spec.eigenvalues.size(); ++i) {
        EXPECT_NEAR(spec.eigenvalues[i], ref.eigenvalues()[i], 1e-9 * top);
    }
}

TEST(Spectral, TooManyRequestedRaises)
{
    const Toy t = make_toy(4, 2, false);
    const auto nb = neighborhood(*t.grid, t.grid->node_id(0, 0));
    const auto ops = assemble_local(*t.mesh, t.medium, nb);
    const auto snaps = solve_snapshots(nb, ops);
    EXPECT_THROW(local_spectral(nb, snaps, ops, snaps.size() + 1), ValidationError);
}

TEST(Space, SupportRankAndNesting)
{
    const Toy t = make_toy(8, 2);
    const auto spectra = compute_spectra(*t.grid, t.medium, 4);
    const auto chi = partition_of_unity(*t.grid);
    const auto s2 = build_space(*t.grid, spectra, chi, BasisSelection{2, {}});
    const auto s4 = build_space(*t.grid, spectra, chi, BasisSelection{4, {}});
    EXPECT_EQ(s2.dim(), 2 * t.grid->num_nodes());
    EXPECT_EQ(s4.dim(), 4 * t.grid->num_nodes());
    const Index n = t.mesh->num_nodes();

    for (Index i = 0; i < t.grid->num_nodes(); ++i) {
        const auto nb = neighborhood(*t.grid, i);
        for (Index k = 0; k < 4; ++k) {
            const Index col = s4.offsets[static_cast<std::size_t>(i)] + k;
            for (SparseMatrix::InnerIterator it(s4.prolongation, col); it; ++it) {
                EXPECT_TRUE(nb.contains(it.row() % n));
            }
        }
    }
    const DenseMatrix p2(s2.prolongation), p4(s4.prolongation);
    EXPECT_EQ(rank_of(p4), s4.dim());
    EXPECT_EQ(rank_of(p2), s2.dim());
    for (Index j = 0; j < p2.cols(); ++j) {
        EXPECT_LT(fit_residual(p4, p2.col(j)), 1e-10);
    }
    EXPECT_GE(s4.lambda, s2.lambda);
}

TEST(Space, ConstantsLieInRange)
{
    const Toy t = make_toy(8, 2);
    const auto space = gmsfem_space(*t.grid, t.medium, BasisSelection{1, {}});
    const DenseMatrix p(space.prolongation);
    EXPECT_LT(fit_residual(p, Vector::Ones(p.rows())), 1e-8);
}

TEST(Space, ThresholdSelection)
{
    const Toy t = make_toy(8, 2);
    const auto spectra = compute_spectra(*t.grid, t.medium, 6);
    const auto chi = partition_of_unity(*t.grid);
    const double thr = spectra[4].eigenvalues[3];
    const auto space = build_space(*t.grid, spectra, chi, BasisSelection{1, thr});
    for (Index i = 0; i < t.grid->num_nodes(); ++i) {
        const auto& ev = spectra[static_cast<std::size_t>(i)].eigenvalues;
        Index expected = 0;
        while (expected < ev.size() && ev[expected] < thr) {
            ++expected;
        }
        expected = std::clamp<Index>(expected, 1, 6);
        EXPECT_EQ(space.counts[static_cast<std::size_t>(i)], expected);
    }
    EXPECT_EQ(space.counts[4], 3);
    // A tiny threshold still keeps one function per neighborhood.
    const auto minimal = build_space(*t.grid, spectra, chi, BasisSelection{1, 1e-300});
    EXPECT_EQ(minimal.dim(), t.grid->num_nodes());
}

TEST(Msfem, DimensionAndPartitionOfUnity)
{
    const Toy t = make_toy(8, 2);
    const auto space = msfem_space(*t.grid, t.medium);
    EXPECT_EQ(space.dim(), 3 * t.grid->num_nodes());
    const Vector sum = DenseMatrix(space.prolongation).rowwise().sum();
    EXPECT_LT((sum - Vector::Ones(sum.size())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Msfem, ReproducesBilinearHatsOnHomogeneousMedium)
{
    const auto mesh = toy::unit_mesh(8, 8);
    const CoarseGrid grid(mesh, 2, 2);
    const Medium m = toy::constant_medium(*mesh, {1e-13, 1e-12, 1e-13});
    const auto space = msfem_space(grid, m);
    const auto chi = partition_of_unity(grid);
    const Index n = mesh->num_nodes();
    const DenseMatrix p(space.prolongation);
    for (Index i = 0; i < grid.num_nodes(); ++i) {
        const Vector sum = p.col(3 * i) + p.col(3 * i + 1) + p.col(3 * i + 2);
        for (int c = 0; c < kContinua; ++c) {
            EXPECT_LT((sum.segment(c * n, n) - chi[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Galerkin, ProjectionIdentities)
{
    const Toy t = make_toy(8, 2);
    const auto space = gmsfem_space(*t.grid, t.medium, BasisSelection{3, {}});
    const Index n3 = space.fine_size();
    SparseMatrix eye(n3, n3);
    eye.setIdentity();
    const DenseMatrix p(space.prolongation);
    EXPECT_LT((galerkin_project(space.prolongation, eye) - p.transpose() * p).norm(), 1e-12 * (p.transpose() * p).norm());

    // Constant fields have zero energy on the coarse level too.
    const SparseMatrix a = global_energy(t);
    const DenseMatrix ac = galerkin_project(space.prolongation, a);
    const Vector c = p.colPivHouseholderQr().solve(Vector::Ones(n3));
    EXPECT_LT(c.dot(ac * c), 1e-10 * ac.norm() * c.squaredNorm());

    const DenseMatrix qc = galerkin_project(space.prolongation, assemble_exchange(*t.mesh, t.medium.exchange));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(qc);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().cwiseAbs().maxCoeff());

    const Vector f = toy::random_vector(n3, 3);
    EXPECT_LT(toy::rel_diff(galerkin_project(space.prolongation, f), p.transpose() * f), 1e-13);
}

TEST(Galerkin, DownscaleAndMask)
{
    const Toy t = make_toy(8, 2);
    const auto space = gmsfem_space(*t.grid, t.medium, BasisSelection{2, {}});
    Vector e = Vector::Zero(space.dim());
    e[5] = 1.0;
    EXPECT_EQ((downscale(space, e) - DenseMatrix(space.prolongation).col(5)).norm(), 0.0);
    EXPECT_EQ(downscale(space, Vector::Zero(space.dim())).norm(), 0.0);
    EXPECT_THROW(downscale(space, Vector::Zero(space.dim() + 1)), ValidationError);

    const DofMap dofs = dirichlet_from_sides(*t.mesh, {{kTop, 5.0}});
    const SparseMatrix masked = mask_rows(space.prolongation, dofs);
    const DenseMatrix pd(space.prolongation), md(masked);
    for (Index r = 0; r < pd.rows(); ++r) {
        if (dofs.is_fixed(r)) {
            EXPECT_EQ(md.row(r).norm(), 0.0);
        } else {
            EXPECT_EQ((md.row(r) - pd.row(r)).norm(), 0.0);
        }
    }
}
