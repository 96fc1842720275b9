#include "vugsim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace vugsim {

void FluidProperties::validate() const
{
    require(compressibility >= 0.0, "fluid.compressibility must be non-negative");
    require(viscosity > 0.0, "fluid.viscosity must be positive");
    require(fvf_reference > 0.0, "fluid.fvf_reference must be positive");
}

double fvf(double pressure, const FluidProperties& fluid)
{
    const double denom = 1.0 + fluid.compressibility * (pressure - fluid.reference_pressure);
    if (!(denom > 0.0)) {
        std::ostringstream msg;
        msg << "singular state: 1 + c (u - u0) = " << denom << " at u = " << pressure;
        throw NumericalError(msg.str());
    }
    return fluid.fvf_reference / denom;
}

double alpha(double pressure, const FluidProperties& fluid)
{
    return (1.0 + fluid.compressibility * (pressure - fluid.reference_pressure)) / fluid.viscosity;
}

double harmonic_mean(double a, double b)
{
    require(a > 0.0 && b > 0.0, "harmonic_mean needs positive arguments");
    return 2.0 * a * b / (a + b);
}

ContinuumParams::ContinuumParams(Continuum id, double porosity, std::vector<double> permeability,
                                 const FluidProperties& fluid)
    : id_(id), porosity_(porosity), permeability_(std::move(permeability))
{
    const std::string name = continuum_name(static_cast<int>(id));
    require(porosity > 0.0 && porosity <= 1.0, name + ".porosity must lie in (0, 1]");
    for (double k : permeability_) {
        require(k > 0.0 && std::isfinite(k), name + ".permeability must be positive everywhere");
    }
    storage_ = porosity_ * fluid.compressibility / fluid.fvf_reference;
}

ExchangeTable::ExchangeTable(double shape_factor, std::array<std::vector<double>, 3> pairs)
    : shape_factor_(shape_factor), pairs_(std::move(pairs))
{
}

int ExchangeTable::slot(int i, int j)
{
    const int lo = std::min(i, j);
    const int hi = std::max(i, j);
    if (lo == 0 && hi == 1) return 0;
    if (lo == 0 && hi == 2) return 1;
    return 2;
}

double ExchangeTable::q(int i, int j, Index t) const
{
    if (i == j) {
        return 0.0;
    }
    return pairs_[static_cast<std::size_t>(slot(i, j))][static_cast<std::size_t>(t)];
}

const std::vector<double>& ExchangeTable::pair(int i, int j) const
{
    require(i != j, "exchange pair needs two distinct continua");
    return pairs_[static_cast<std::size_t>(slot(i, j))];
}

ExchangeTable exchange_coefficients(const std::array<ContinuumParams, kContinua>& continua, double shape_factor,
                                    double viscosity)
{
    require(shape_factor >= 0.0, "shape factor must be non-negative");
    require(viscosity > 0.0, "viscosity must be positive");
    const Index n = continua[0].size();
    for (const auto& c : continua) {
        require(c.size() == n, "continuum permeability fields differ in length");
    }
    std::array<std::vector<double>, 3> pairs;
    const std::array<std::array<int, 2>, 3> order{{{0, 1}, {0, 2}, {1, 2}}};
    for (std::size_t p = 0; p < 3; ++p) {
        const auto& a = continua[static_cast<std::size_t>(order[p][0])];
        const auto& b = continua[static_cast<std::size_t>(order[p][1])];
        pairs[p].resize(static_cast<std::size_t>(n));
        for (Index t = 0; t < n; ++t) {
            pairs[p][static_cast<std::size_t>(t)] =
                shape_factor * harmonic_mean(a.permeability(t), b.permeability(t)) / viscosity;
        }
    }
    return ExchangeTable(shape_factor, std::move(pairs));
}

std::vector<double> synth_permeability(std::uint64_t seed, Index nx, Index ny, double contrast, double minimum)
{
    require(contrast >= 1.0, "permeability contrast must be >= 1");
    require(minimum > 0.0, "permeability minimum must be positive");
    require(nx >= 1 && ny >= 1, "permeability lattice must be non-empty");

    const auto cells = static_cast<std::size_t>(nx * ny);
    if (contrast == 1.0) {
        return std::vector<double>(2 * cells, minimum);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // Smooth background: a handful of random low-wavenumber Fourier modes.
    struct Mode {
        double kx, ky, phase, amp;
    };
    std::vector<Mode> modes;
    for (int m = 0; m < 12; ++m) {
        const double kx = 1.0 + std::floor(unit(rng) * 6.0);
        const double ky = 1.0 + std::floor(unit(rng) * 6.0);
        modes.push_back({kx, ky, two_pi * unit(rng), 1.0 / std::hypot(kx, ky)});
    }
    // Channels: narrow sinuous bands.
    struct Channel {
        double offset, amp, wavenumber, phase, width;
        bool horizontal;
    };
    std::vector<Channel> channels;
    for (int c = 0; c < 3; ++c) {
        channels.push_back({0.15 + 0.7 * unit(rng), 0.05 + 0.1 * unit(rng), 1.0 + std::floor(unit(rng) * 3.0),
                            two_pi * unit(rng), 0.02 + 0.02 * unit(rng), unit(rng) < 0.5});
    }

    std::vector<double> field(cells);
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(nx);
            const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(ny);
            double v = 0.0;
            for (const auto& m : modes) {
                v += m.amp * std::sin(two_pi * (m.kx * x + m.ky * y) / 2.0 + m.phase);
            }
            v = 0.5 * v / static_cast<double>(modes.size());
            for (const auto& ch : channels) {
                const double along = ch.horizontal ? x : y;
                const double across = ch.horizontal ? y : x;
                const double center = ch.offset + ch.amp * std::sin(two_pi * ch.wavenumber * along + ch.phase);
                const double d = (across - center) / ch.width;
                v += 2.0 * std::exp(-d * d);
            }
            field[static_cast<std::size_t>(j * nx + i)] = v;
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    const double log_contrast = std::log(contrast);

    std::vector<double> perm(2 * cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const double s = span > 0.0 ? (field[c] - lo) / span : 0.0;
        double k = minimum * std::exp(s * log_contrast);
        if (s == 1.0) {
            k = minimum * contrast;
        }
        perm[2 * c] = k;
        perm[2 * c + 1] = k;
    }
    return perm;
}

std::vector<double> load_permeability_csv(const std::string& path, Index expected_count)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read permeability file '" + path + "'");
    }
    std::vector<double> values;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        double v = 0.0;
        if (!(ls >> v) || !(v > 0.0)) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected a positive permeability");
        }
        values.push_back(v);
    }
    if (static_cast<Index>(values.size()) != expected_count) {
        throw ValidationError(path + ": expected " + std::to_string(expected_count) + " values, found " +
                              std::to_string(values.size()));
    }
    return values;
}

}  // namespace vugsim
