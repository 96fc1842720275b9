#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vugsim {

using Index = std::int64_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Bad input: configuration, geometry or precondition violations. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: singular systems, failed factorizations, non-convergence. Exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ValidationError(message);
    }
}

/// Continua of the triple-continuum model, in DOF-block order.
enum class Continuum : int { Matrix = 0, Fracture = 1, Vug = 2 };

inline constexpr int kContinua = 3;

inline const char* continuum_name(int c)
{
    switch (c) {
    case 0: return "matrix";
    case 1: return "fracture";
    case 2: return "vug";
    default: return "combined";
    }
}

}  // namespace vugsim
