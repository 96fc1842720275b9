#pragma once

#include "vugsim/assembly.hpp"
#include "vugsim/geometry.hpp"
#include "vugsim/physics.hpp"
#include "vugsim/timestepper.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vugsim {

struct PermeabilitySpec {
    enum class Kind { Constant, Synthetic, Csv };
    Kind kind = Kind::Constant;
    double value = 0.0;        ///< constant
    std::uint64_t seed = 0;    ///< synthetic
    double contrast = 1.0;     ///< synthetic: max / min
    double minimum = 0.0;      ///< synthetic: smallest value
    std::string path;          ///< csv, resolved against the config file's directory
};

struct ContinuumSpec {
    double porosity = 0.0;
    PermeabilitySpec permeability;
};

struct BoundarySpec {
    enum class Kind { Neumann, Dirichlet };
    Kind kind = Kind::Neumann;
    double value = 0.0;  ///< Dirichlet pressure or outward Neumann flux
};

/// Side order of ScenarioConfig::boundary.
inline constexpr std::array<unsigned, 4> kSides{kLeft, kRight, kBottom, kTop};
const char* side_name(unsigned side);

/// Fully resolved scenario. Omitted JSON fields take the reference field values.
struct ScenarioConfig {
    Box domain{{0.0, 0.0}, {4572.0, 4572.0}};
    Index nx = 160;
    Index ny = 160;
    Index mx = 20;
    Index my = 20;
    FluidProperties fluid;
    std::array<ContinuumSpec, kContinua> continua;
    FractureNetwork network;
    double shape_factor = 0.0;  ///< 0 means 1 / h_min^2
    std::array<BoundarySpec, 4> boundary;
    std::vector<PointWell> wells;
    double initial_pressure = 0.0;
    TimeControls time;
    Index basis_count = 8;
    double basis_threshold = 0.0;  ///< if positive, L_omega = #{lambda < threshold} per neighborhood
    std::string output_dir = "output";

    ScenarioConfig();
    void validate() const;
    /// Canonical JSON text of the resolved configuration.
    std::string canonical_json() const;
    /// FNV-1a 64 of canonical_json, as 16 hex digits.
    std::string hash() const;
};

/// Parses JSON text. Unknown keys and type mismatches are ValidationErrors naming the field path.
ScenarioConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

}  // namespace vugsim
