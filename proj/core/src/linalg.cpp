#include "vugsim/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace vugsim {

Vector solve_dense_spd(const DenseMatrix& a, const Vector& b)
{
    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("dense Cholesky failed: matrix is not positive definite");
    }
    return llt.solve(b);
}

Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolveOptions& options, SolveReport* report)
{
    const Index n = a.rows();
    require(a.cols() == n && b.size() == n, "solve_spd: dimension mismatch");
    SolveReport local;
    SolveReport& rep = report ? *report : local;
    const double bnorm = b.norm();
    if (n == 0) {
        rep = {};
        return Vector(0);
    }
    if (bnorm == 0.0) {
        rep = {};
        return Vector::Zero(n);
    }

    if (n < options.dense_threshold) {
        Vector x = solve_dense_spd(DenseMatrix(a), b);
        rep.iterations = 0;
        rep.relative_residual = (a * x - b).norm() / bnorm;
        if (!(rep.relative_residual <= options.tolerance)) {
            // One step of iterative refinement before giving up.
            x += solve_dense_spd(DenseMatrix(a), b - a * x);
            rep.relative_residual = (a * x - b).norm() / bnorm;
        }
        if (!(rep.relative_residual <= options.tolerance)) {
            std::ostringstream msg;
            msg << "dense SPD solve reached relative residual " << rep.relative_residual << " > " << options.tolerance;
            throw NumericalError(msg.str());
        }
        return x;
    }

    Vector inv_diag(n);
    for (Index i = 0; i < n; ++i) {
        const double d = a.coeff(i, i);
        if (!(d > 0.0)) {
            throw NumericalError("PCG: non-positive diagonal entry at row " + std::to_string(i));
        }
        inv_diag[i] = 1.0 / d;
    }
    const Index cap = options.max_iterations > 0 ? options.max_iterations : 10 * n;
    Vector x = Vector::Zero(n);
    Vector r = b;
    Vector z = inv_diag.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    Index it = 0;
    double rel = 1.0;
    while (it < cap) {
        const Vector ap = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            throw NumericalError("PCG: matrix is not positive definite along a search direction");
        }
        const double step = rz / pap;
        x += step * p;
        r -= step * ap;
        ++it;
        rel = r.norm() / bnorm;
        if (rel <= options.tolerance) {
            // Confirm with the true residual; recurrences drift.
            rel = (b - a * x).norm() / bnorm;
            if (rel <= options.tolerance) {
                break;
            }
            r = b - a * x;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    rep.iterations = it;
    rep.relative_residual = rel;
    if (!(rel <= options.tolerance)) {
        std::ostringstream msg;
        msg << "PCG did not converge in " << it << " iterations: relative residual " << rel << " > "
            << options.tolerance;
        throw NumericalError(msg.str());
    }
    return x;
}

SparseCholesky::SparseCholesky(const SparseMatrix& a)
{
    factorize(a);
}

void SparseCholesky::factorize(const SparseMatrix& a)
{
    if (!solver_) {
        solver_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
        solver_->analyzePattern(a);
    }
    solver_->factorize(a);
    if (solver_->info() != Eigen::Success) {
        throw NumericalError("sparse LDL^T factorization failed: singular system");
    }
    const Vector d = solver_->vectorD();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0.0)) {
            throw NumericalError("sparse LDL^T factorization: matrix is not positive definite (singular system)");
        }
    }
}

Vector SparseCholesky::solve(const Vector& b) const
{
    require(solver_ != nullptr, "SparseCholesky used before factorization");
    return solver_->solve(b);
}

DenseMatrix SparseCholesky::solve(const DenseMatrix& b) const
{
    require(solver_ != nullptr, "SparseCholesky used before factorization");
    return solver_->solve(b);
}

EigenDecomposition sym_eig_jacobi(const DenseMatrix& input)
{
    const Index n = input.rows();
    require(input.cols() == n, "sym_eig_jacobi needs a square matrix");
    DenseMatrix a = 0.5 * (input + input.transpose());
    DenseMatrix v = DenseMatrix::Identity(n, n);

    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < j; ++i) {
                off += a(i, j) * a(i, j);
            }
        }
        if (std::sqrt(2.0 * off) <= 1e-15 * scale) {
            break;
        }
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) {
                    continue;
                }
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Skip rotations that would not change the diagonal in floating point.
                if (sweep > 3 && std::abs(apq) < 1e-18 * (std::abs(app) + std::abs(aqq))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // Symmetric update: columns p and q are contiguous, rows mirror them.
                auto col_p = a.col(p);
                auto col_q = a.col(q);
                for (Index k = 0; k < n; ++k) {
                    if (k == p || k == q) {
                        continue;
                    }
                    const double akp = col_p[k];
                    const double akq = col_q[k];
                    col_p[k] = c * akp - s * akq;
                    col_q[k] = s * akp + c * akq;
                    a(p, k) = col_p[k];
                    a(q, k) = col_q[k];
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;

                auto vp = v.col(p);
                auto vq = v.col(q);
                for (Index k = 0; k < n; ++k) {
                    const double vkp = vp[k];
                    const double vkq = vq[k];
                    vp[k] = c * vkp - s * vkq;
                    vq[k] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values[k] = a(src, src);
        out.vectors.col(k) = v.col(src);
    }
    return out;
}

EigenDecomposition gen_eig_sym(const DenseMatrix& a, const DenseMatrix& s)
{
    const Index n = a.rows();
    require(a.cols() == n && s.rows() == n && s.cols() == n, "gen_eig_sym: dimension mismatch");
    const DenseMatrix s_sym = 0.5 * (s + s.transpose());
    Eigen::LLT<DenseMatrix> llt(s_sym);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(
            "gen_eig_sym: S is not positive definite (Cholesky failed); regularize the snapshot space by "
            "dropping near-dependent snapshots");
    }
    const DenseMatrix lower = llt.matrixL();
    // C = L^{-1} A L^{-T}
    DenseMatrix tmp = lower.triangularView<Eigen::Lower>().solve(0.5 * (a + a.transpose()));
    DenseMatrix c = lower.triangularView<Eigen::Lower>().solve(tmp.transpose());
    EigenDecomposition std_eig = sym_eig_jacobi(c);
    std_eig.vectors = lower.transpose().triangularView<Eigen::Upper>().solve(std_eig.vectors);
    return std_eig;
}

EigenDecomposition gen_eig_sym_filtered(const DenseMatrix& a, const DenseMatrix& s, double max_condition,
                                        double cutoff)
{
    const Index n = a.rows();
    require(a.cols() == n && s.rows() == n && s.cols() == n, "gen_eig_sym_filtered: dimension mismatch");
    if (n == 0) {
        return {};
    }
    Eigen::LLT<DenseMatrix> llt(0.5 * (s + s.transpose()));
    if (llt.info() == Eigen::Success) {
        const Vector d = DenseMatrix(llt.matrixL()).diagonal();
        const double ratio = d.maxCoeff() / d.minCoeff();
        // Squared pivot ratio is a cheap lower bound on cond(S).
        if (ratio * ratio <= max_condition) {
            return gen_eig_sym(a, s);
        }
    }
    const EigenDecomposition s_eig = sym_eig_jacobi(s);
    const double smax = s_eig.values.maxCoeff();
    if (!(smax > 0.0)) {
        throw NumericalError("gen_eig_sym_filtered: S has no positive directions");
    }
    std::vector<Index> keep;
    for (Index k = 0; k < n; ++k) {
        if (s_eig.values[k] > cutoff * smax) {
            keep.push_back(k);
        }
    }
    DenseMatrix z(n, static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        z.col(static_cast<Index>(k)) = s_eig.vectors.col(keep[k]) / std::sqrt(s_eig.values[keep[k]]);
    }
    // Z^T S Z = I on the kept directions.
    EigenDecomposition reduced = sym_eig_jacobi(z.transpose() * a * z);
    reduced.vectors = z * reduced.vectors;
    return reduced;
}

namespace {

std::ofstream open_for_write(const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write '" + path + "'");
    }
    out << std::setprecision(17);
    return out;
}

std::ifstream open_mm(const std::string& path, std::string& header)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read '" + path + "'");
    }
    std::getline(in, header);
    if (header.rfind("%%MatrixMarket", 0) != 0) {
        throw ValidationError(path + ": missing MatrixMarket banner");
    }
    return in;
}

std::string next_data_line(std::ifstream& in)
{
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') {
            return line;
        }
    }
    return {};
}

}  // namespace

void write_matrix_market(const std::string& path, const SparseMatrix& m)
{
    auto out = open_for_write(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (Index col = 0; col < m.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

void write_matrix_market(const std::string& path, const DenseMatrix& m)
{
    auto out = open_for_write(path);
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            out << m(i, j) << '\n';
        }
    }
}

SparseMatrix read_matrix_market_sparse(const std::string& path)
{
    std::string header;
    auto in = open_mm(path, header);
    require(header.find("coordinate") != std::string::npos, path + ": expected coordinate format");
    const bool symmetric = header.find("symmetric") != std::string::npos;
    std::istringstream dims(next_data_line(in));
    Index rows = 0, cols = 0, nnz = 0;
    require(static_cast<bool>(dims >> rows >> cols >> nnz), path + ": bad size line");
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    for (Index k = 0; k < nnz; ++k) {
        std::istringstream ls(next_data_line(in));
        Index i = 0, j = 0;
        double v = 0.0;
        require(static_cast<bool>(ls >> i >> j >> v), path + ": bad entry " + std::to_string(k));
        trip.emplace_back(i - 1, j - 1, v);
        if (symmetric && i != j) {
            trip.emplace_back(j - 1, i - 1, v);
        }
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

DenseMatrix read_matrix_market_dense(const std::string& path)
{
    std::string header;
    auto in = open_mm(path, header);
    if (header.find("coordinate") != std::string::npos) {
        return DenseMatrix(read_matrix_market_sparse(path));
    }
    std::istringstream dims(next_data_line(in));
    Index rows = 0, cols = 0;
    require(static_cast<bool>(dims >> rows >> cols), path + ": bad size line");
    DenseMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            std::istringstream ls(next_data_line(in));
            require(static_cast<bool>(ls >> m(i, j)), path + ": truncated array data");
        }
    }
    return m;
}

}  // namespace vugsim
