#pragma once

#include "vugsim/common.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <string>

namespace vugsim {

struct SolveOptions {
    double tolerance = 1e-10;
    Index max_iterations = 0;  ///< 0 means 10 * n
    Index dense_threshold = 200;
};

struct SolveReport {
    Index iterations = 0;
    double relative_residual = 0.0;
};

/// SPD solve: dense Cholesky below `dense_threshold`, Jacobi-preconditioned CG otherwise.
/// Guarantees ||Ax - b|| <= tol ||b|| or throws NumericalError with the achieved residual.
Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolveOptions& options = {},
                 SolveReport* report = nullptr);

/// Reusable sparse LDL^T factorization for repeated right-hand sides.
class SparseCholesky {
public:
    SparseCholesky() = default;
    explicit SparseCholesky(const SparseMatrix& a);

    /// Refactor a matrix with the same sparsity pattern as the analyzed one.
    void factorize(const SparseMatrix& a);
    bool analyzed() const { return solver_ != nullptr; }

    Vector solve(const Vector& b) const;
    DenseMatrix solve(const DenseMatrix& b) const;

private:
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> solver_;
};

/// Dense SPD solve via Cholesky. Throws NumericalError if the matrix is not positive definite.
Vector solve_dense_spd(const DenseMatrix& a, const Vector& b);

/// Eigenpairs sorted ascending; vectors stored as columns.
struct EigenDecomposition {
    Vector values;
    DenseMatrix vectors;

    Index size() const { return values.size(); }
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations, orthonormal vectors.
EigenDecomposition sym_eig_jacobi(const DenseMatrix& a);

/// A psi = lambda S psi with S positive definite: Cholesky reduction S = L L^T, then Jacobi on
/// L^{-1} A L^{-T}. Vectors are S-orthonormal. Throws NumericalError if S is not positive definite.
EigenDecomposition gen_eig_sym(const DenseMatrix& a, const DenseMatrix& s);

/// gen_eig_sym with snapshot-space conditioning: when cond(S) exceeds `max_condition`, S-eigendirections
/// below `cutoff * max` are dropped first, so fewer than n pairs may be returned.
EigenDecomposition gen_eig_sym_filtered(const DenseMatrix& a, const DenseMatrix& s, double max_condition = 1e12,
                                        double cutoff = 1e-12);

/// MatrixMarket coordinate / array I/O (real, general).
void write_matrix_market(const std::string& path, const SparseMatrix& m);
void write_matrix_market(const std::string& path, const DenseMatrix& m);
SparseMatrix read_matrix_market_sparse(const std::string& path);
DenseMatrix read_matrix_market_dense(const std::string& path);

}  // namespace vugsim
