#pragma once

#include "vugsim/assembly.hpp"
#include "vugsim/linalg.hpp"
#include "vugsim/multiscale.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vugsim {

enum class Scheme { Linearized, FixedPoint };

Scheme parse_scheme(const std::string& name);
const char* scheme_name(Scheme scheme);

/// Uniform backward-Euler controls; times in days.
struct TimeControls {
    double dt = 1.0;
    double final_time = 20.0;
    Scheme scheme = Scheme::Linearized;
    double tolerance = 1e-8;
    Index max_iterations = 50;

    void validate() const;
    /// Number of steps to reach final_time; a trailing partial step is rounded to a full one.
    Index num_steps() const;
};

/// Fine nodal pressures (all continua) and, in coarse mode, the coefficients that produced them.
struct SystemState {
    double time = 0.0;
    Vector fine;
    Vector coefficients;
};

struct StepReport {
    Index iterations = 0;
    bool converged = true;
    double relative_update = 0.0;
};

/// Fine operators shared by every mode: lag-independent matrices, load and the Dirichlet set.
struct FlowProblem {
    std::shared_ptr<const FineMesh> mesh;
    Medium medium;
    SparseMatrix mass;
    SparseMatrix exchange;
    Vector load;
    DofMap dofs{0};

    static FlowProblem make(std::shared_ptr<const FineMesh> mesh, Medium medium, const SourceSpec& sources,
                            DofMap dofs);
    SparseMatrix stiffness(const Vector& lag) const { return assemble_stiffness(*mesh, medium, lag); }
    /// M / dt + K(lag) + Q
    SparseMatrix system_matrix(const Vector& lag, double dt) const;
};

double b_norm(const SparseMatrix& mass, const Vector& u);

/// Backward Euler on some trial space. `step` dispatches on the scheme in the controls.
class Integrator {
public:
    explicit Integrator(TimeControls controls) : controls_(controls) { controls_.validate(); }
    virtual ~Integrator() = default;

    const TimeControls& controls() const { return controls_; }
    virtual SystemState initial(const Vector& u0) const = 0;
    virtual Index dofs() const = 0;

    /// alpha frozen at the previous state.
    SystemState step_linearized(const SystemState& previous, StepReport* report = nullptr);
    /// Picard iteration on alpha starting from the previous state.
    SystemState step_fixed_point(const SystemState& previous, StepReport* report = nullptr);
    SystemState step(const SystemState& previous, StepReport* report = nullptr);

protected:
    /// Solves [M/dt + K(lag) + Q] u = M u_prev / dt + F on the trial space.
    virtual SystemState solve_with_lag(const SystemState& previous, const Vector& lag_fine) = 0;
    virtual const SparseMatrix& mass() const = 0;

    TimeControls controls_;
};

class FineIntegrator final : public Integrator {
public:
    FineIntegrator(const FlowProblem& problem, TimeControls controls);

    SystemState initial(const Vector& u0) const override;
    Index dofs() const override { return problem_.dofs.size(); }

protected:
    SystemState solve_with_lag(const SystemState& previous, const Vector& lag_fine) override;
    const SparseMatrix& mass() const override { return problem_.mass; }

private:
    const FlowProblem& problem_;
    SparseCholesky solver_;
    std::vector<Index> pattern_;  // outer/inner indices of the last factorized matrix
};

/// Galerkin scheme on u = g + P c, where P has its Dirichlet rows zeroed and g carries the boundary data.
class CoarseIntegrator final : public Integrator {
public:
    CoarseIntegrator(const FlowProblem& problem, const MultiscaleSpace& space, const Vector& lifting,
                     TimeControls controls);

    SystemState initial(const Vector& u0) const override;
    Index dofs() const override { return prolongation_.cols(); }
    const SparseMatrix& prolongation() const { return prolongation_; }
    const Vector& lifting() const { return lifting_; }

protected:
    SystemState solve_with_lag(const SystemState& previous, const Vector& lag_fine) override;
    const SparseMatrix& mass() const override { return problem_.mass; }

private:
    const FlowProblem& problem_;
    SparseMatrix prolongation_;
    Vector lifting_;
    DenseMatrix coarse_mass_;
};

/// b-projection: solves (P^T M P) c = P^T M u0. Throws NumericalError if the Gram matrix is singular.
Vector project_initial(const SparseMatrix& mass, const SparseMatrix& prolongation, const Vector& u0);

/// Fine field equal to the Dirichlet values on fixed DOFs and to their coarse-hat interpolation nearby.
Vector dirichlet_lifting(const CoarseGrid& grid, const DofMap& dofs);

struct StepDiagnostics {
    double time = 0.0;
    double mass = 0.0;
    Index iterations = 0;
    bool converged = true;
    double wall_seconds = 0.0;
};

struct RunResult {
    std::vector<SystemState> states;  ///< including the initial state
    std::vector<StepDiagnostics> diagnostics;
};

/// Time loop from u0 to controls.final_time. `observer` (optional) sees each new state.
RunResult run(Integrator& integrator, const SparseMatrix& mass, const Vector& u0,
              const std::function<void(const SystemState&)>& observer = {});

}  // namespace vugsim
