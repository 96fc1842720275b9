#pragma once

#include "vugsim/multiscale.hpp"
#include "vugsim/scenario.hpp"
#include "vugsim/timestepper.hpp"

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vugsim {

enum class Mode { Fine, Gmsfem, Msfem };

Mode parse_mode(const std::string& name);
const char* mode_name(Mode mode);

/// Mesh, coarse grid and fine operators built from a scenario.
struct Setup {
    ScenarioConfig config;
    std::shared_ptr<const FineMesh> mesh;
    std::shared_ptr<const CoarseGrid> grid;
    FlowProblem problem;
    Vector initial;
};

Medium build_medium(const ScenarioConfig& config, const FineMesh& mesh);
SourceSpec build_sources(const ScenarioConfig& config);
DofMap build_dofs(const ScenarioConfig& config, const FineMesh& mesh);
Setup build_setup(const ScenarioConfig& config);

struct ModeRun {
    Mode mode = Mode::Fine;
    Index basis_count = 0;  ///< 0 for fine and MsFEM
    Index dofs = 0;
    double lambda = 0.0;    ///< NaN unless GMsFEM with a discarded eigenvalue
    double offline_seconds = 0.0;
    double online_seconds = 0.0;
    RunResult result;
};

ModeRun run_fine(const Setup& setup);
ModeRun run_coarse(const Setup& setup, Mode mode, const MultiscaleSpace& space, Index basis_count);
/// Builds the space for the mode (GMsFEM uses config.basis_count unless `basis_count` > 0) and runs it.
ModeRun run_mode(const Setup& setup, Mode mode, Index basis_count = 0);

/// Unweighted P1 mass matrix (n x n).
SparseMatrix p1_mass(const FineMesh& mesh);

/// Percent errors: matrix, fracture, vug, combined.
using ContinuumErrors = std::array<double, kContinua + 1>;

/// 100 * ||u_a - u_r|| / ||u_r|| in the P1 L2 norm, per continuum and over all continua together.
/// Throws ValidationError when a reference norm is zero.
ContinuumErrors l2_relative_error(const SparseMatrix& p1, const Vector& approx, const Vector& reference);
ContinuumErrors l2_relative_error(const FineMesh& mesh, const Vector& approx, const Vector& reference);

/// Index of the stored state at `day`; throws if the day is not a step time within the run.
Index state_index(const TimeControls& controls, double day);

struct ErrorRow {
    std::string basis;  ///< basis count, or "msfem"
    double day = 0.0;
    ContinuumErrors errors{};
};

struct ErrorReport {
    std::vector<double> days;
    std::vector<ErrorRow> rows;
    Index fine_dofs = 0;
    std::map<std::string, Index> dofs;        ///< per row label
    std::map<std::string, double> lambda;     ///< per GMsFEM row label
    std::map<std::string, double> runtimes;   ///< seconds, per label plus "fine"

    /// Combined error for a row label and day.
    double combined(const std::string& basis, double day) const;
    /// Human-readable table: rows = basis label, columns = days, combined errors.
    std::string table() const;
    /// "basis,day,continuum,error_pct" rows.
    std::string csv() const;
};

/// Runs the fine reference once, then each coarse mode (GMsFEM for every basis count).
ErrorReport compare(const Setup& setup, const std::vector<Mode>& modes, const std::vector<Index>& basis_counts,
                    const std::vector<double>& days);

/// Linear steady Galerkin error in the energy norm of a(.,.;alpha=1/mu) + q as the basis count grows.
struct SweepPoint {
    Index count = 0;
    Index dofs = 0;
    double lambda = 0.0;
    double energy_error = 0.0;      ///< ||u - u_ms||_A
    double relative_error = 0.0;    ///< divided by ||u||_A
};

std::vector<SweepPoint> steady_energy_sweep(const Setup& setup, const std::vector<Index>& counts);

}  // namespace vugsim
