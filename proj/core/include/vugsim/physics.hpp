#pragma once

#include "vugsim/common.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vugsim {

/// Slightly compressible fluid. Defaults are the reference field values (kPa, Pa*s, m^3/m^3).
struct FluidProperties {
    double compressibility = 1.4504e-8;     ///< c
    double viscosity = 8e-3;                ///< mu
    double fvf_reference = 1.1;             ///< B at the reference pressure
    double reference_pressure = 2.0684e7;   ///< u0

    void validate() const;
};

/// Formation volume factor B(u) = B0 / (1 + c (u - u0)). Throws NumericalError when the denominator
/// is not positive.
double fvf(double pressure, const FluidProperties& fluid);

/// Mobility multiplier alpha(u) = (1 + c (u - u0)) / mu.
double alpha(double pressure, const FluidProperties& fluid);

double harmonic_mean(double a, double b);

/// One continuum: porosity, per-triangle permeability and the cached storage coefficient phi c / B0.
class ContinuumParams {
public:
    ContinuumParams() = default;
    ContinuumParams(Continuum id, double porosity, std::vector<double> permeability, const FluidProperties& fluid);

    Continuum id() const { return id_; }
    double porosity() const { return porosity_; }
    double storage() const { return storage_; }
    const std::vector<double>& permeability() const { return permeability_; }
    double permeability(Index t) const { return permeability_[static_cast<std::size_t>(t)]; }
    Index size() const { return static_cast<Index>(permeability_.size()); }

private:
    Continuum id_ = Continuum::Matrix;
    double porosity_ = 0.0;
    std::vector<double> permeability_;
    double storage_ = 0.0;
};

/// Pairwise exchange coefficients q^{i,j} = sigma * harmonic_mean(kappa^i, kappa^j) / mu per triangle.
class ExchangeTable {
public:
    ExchangeTable() = default;
    ExchangeTable(double shape_factor, std::array<std::vector<double>, 3> pairs);

    double shape_factor() const { return shape_factor_; }
    /// q^{i,j} on triangle t; zero on the diagonal.
    double q(int i, int j, Index t) const;
    const std::vector<double>& pair(int i, int j) const;

private:
    static int slot(int i, int j);

    double shape_factor_ = 0.0;
    std::array<std::vector<double>, 3> pairs_;  // (m,f), (m,v), (f,v)
};

ExchangeTable exchange_coefficients(const std::array<ContinuumParams, kContinua>& continua, double shape_factor,
                                    double viscosity);

/// Shape factor rule 1 / h_min^2.
inline double shape_factor_from_mesh(double h_min)
{
    return 1.0 / (h_min * h_min);
}

/// Deterministic log-scaled heterogeneous field with high-permeability channels on an nx-by-ny cell
/// lattice, expanded to two triangles per cell. min/max equals `contrast`, smallest value `minimum`.
std::vector<double> synth_permeability(std::uint64_t seed, Index nx, Index ny, double contrast, double minimum);

/// One value per line, in triangle order.
std::vector<double> load_permeability_csv(const std::string& path, Index expected_count);

}  // namespace vugsim
