#include "vugsim/timestepper.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <limits>

namespace vugsim {

Scheme parse_scheme(const std::string& name)
{
    if (name == "linearized") {
        return Scheme::Linearized;
    }
    if (name == "fixed_point") {
        return Scheme::FixedPoint;
    }
    throw ValidationError("unknown time scheme '" + name + "' (expected linearized or fixed_point)");
}

const char* scheme_name(Scheme scheme)
{
    return scheme == Scheme::Linearized ? "linearized" : "fixed_point";
}

void TimeControls::validate() const
{
    require(std::isfinite(dt) && dt > 0.0, "time.dt must be positive");
    require(std::isfinite(final_time) && final_time >= dt, "time.final_time must be at least time.dt");
    require(tolerance > 0.0, "time.tolerance must be positive");
    require(max_iterations >= 1, "time.max_iterations must be at least 1");
}

Index TimeControls::num_steps() const
{
    return static_cast<Index>(std::ceil(final_time / dt - 1e-9));
}

FlowProblem FlowProblem::make(std::shared_ptr<const FineMesh> mesh, Medium medium, const SourceSpec& sources,
                              DofMap dofs)
{
    require(mesh != nullptr, "FlowProblem needs a mesh");
    require(dofs.num_nodes() == mesh->num_nodes(), "FlowProblem: DOF map does not match the mesh");
    FlowProblem p;
    p.mesh = std::move(mesh);
    p.medium = std::move(medium);
    p.mass = assemble_mass(*p.mesh, p.medium);
    p.exchange = assemble_exchange(*p.mesh, p.medium.exchange);
    p.load = assemble_load(*p.mesh, sources);
    p.dofs = std::move(dofs);
    return p;
}

SparseMatrix FlowProblem::system_matrix(const Vector& lag, double dt) const
{
    SparseMatrix a = (1.0 / dt) * mass + stiffness(lag) + exchange;
    a.makeCompressed();
    return a;
}

double b_norm(const SparseMatrix& mass, const Vector& u)
{
    return std::sqrt(std::max(0.0, u.dot(mass * u)));
}

SystemState Integrator::step_linearized(const SystemState& previous, StepReport* report)
{
    SystemState next = solve_with_lag(previous, previous.fine);
    if (report) {
        *report = StepReport{1, true, 0.0};
    }
    return next;
}

SystemState Integrator::step_fixed_point(const SystemState& previous, StepReport* report)
{
    const SparseMatrix& m = mass();
    SystemState current = previous;
    StepReport rep;
    rep.converged = false;
    for (Index it = 1; it <= controls_.max_iterations; ++it) {
        SystemState next = solve_with_lag(previous, current.fine);
        const double update = b_norm(m, next.fine - current.fine);
        const double scale = std::max(b_norm(m, next.fine), std::numeric_limits<double>::min());
        rep.iterations = it;
        rep.relative_update = update / scale;
        current = std::move(next);
        if (rep.relative_update <= controls_.tolerance) {
            rep.converged = true;
            break;
        }
    }
    if (report) {
        *report = rep;
    }
    return current;
}

SystemState Integrator::step(const SystemState& previous, StepReport* report)
{
    return controls_.scheme == Scheme::Linearized ? step_linearized(previous, report)
                                                   : step_fixed_point(previous, report);
}

FineIntegrator::FineIntegrator(const FlowProblem& problem, TimeControls controls)
    : Integrator(controls), problem_(problem)
{
}

SystemState FineIntegrator::initial(const Vector& u0) const
{
    require(u0.size() == problem_.dofs.size(), "initial state has the wrong length");
    SystemState s;
    s.fine = u0;
    for (const auto& [d, v] : problem_.dofs.dirichlet()) {
        s.fine[d] = v;
    }
    return s;
}

SystemState FineIntegrator::solve_with_lag(const SystemState& previous, const Vector& lag_fine)
{
    const double dt = controls_.dt;
    const SparseMatrix a = problem_.system_matrix(lag_fine, dt);
    const Vector rhs = problem_.mass * previous.fine / dt + problem_.load;
    const ReducedSystem sys = apply_dirichlet(a, rhs, problem_.dofs);

    std::vector<Index> pattern(sys.matrix.outerIndexPtr(), sys.matrix.outerIndexPtr() + sys.matrix.outerSize() + 1);
    pattern.insert(pattern.end(), sys.matrix.innerIndexPtr(), sys.matrix.innerIndexPtr() + sys.matrix.nonZeros());
    if (pattern != pattern_) {
        solver_ = SparseCholesky();
        pattern_ = std::move(pattern);
    }
    solver_.factorize(sys.matrix);

    SystemState next;
    next.time = previous.time + dt;
    // One step of iterative refinement: storage is tiny next to the fracture stiffness, so the
    // direct-solve residual would otherwise show up as a spurious mass change.
    Vector x = solver_.solve(sys.rhs);
    x += solver_.solve(Vector(sys.rhs - sys.matrix * x));
    next.fine = sys.expand(x);
    if (!next.fine.allFinite()) {
        throw NumericalError("fine step produced non-finite pressures at t=" + std::to_string(next.time));
    }
    return next;
}

Vector project_initial(const SparseMatrix& mass, const SparseMatrix& prolongation, const Vector& u0)
{
    require(u0.size() == prolongation.rows(), "project_initial: dimension mismatch");
    const DenseMatrix gram = galerkin_project(prolongation, mass);
    const Vector rhs = prolongation.transpose() * (mass * u0);
    try {
        return solve_dense_spd(gram, rhs);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("singular Gram matrix P^T M P (rank-deficient prolongation): ") + e.what());
    }
}

Vector dirichlet_lifting(const CoarseGrid& grid, const DofMap& dofs)
{
    const FineMesh& mesh = grid.mesh();
    const Index n = mesh.num_nodes();
    Vector g = Vector::Zero(dofs.size());
    if (dofs.dirichlet().empty()) {
        return g;
    }
    const auto chi = partition_of_unity(grid);
    for (Index i = 0; i < grid.num_nodes(); ++i) {
        const Index fine = grid.fine_node(i);
        for (int c = 0; c < kContinua; ++c) {
            const auto it = dofs.dirichlet().find(c * n + fine);
            if (it == dofs.dirichlet().end()) {
                continue;
            }
            g.segment(c * n, n) += it->second * chi[static_cast<std::size_t>(i)];
        }
    }
    for (const auto& [d, v] : dofs.dirichlet()) {
        g[d] = v;
    }
    return g;
}

CoarseIntegrator::CoarseIntegrator(const FlowProblem& problem, const MultiscaleSpace& space, const Vector& lifting,
                                   TimeControls controls)
    : Integrator(controls), problem_(problem), prolongation_(mask_rows(space.prolongation, problem.dofs)),
      lifting_(lifting)
{
    require(space.fine_size() == problem.dofs.size(), "multiscale space does not match the fine problem");
    require(lifting.size() == problem.dofs.size(), "lifting has the wrong length");
    coarse_mass_ = galerkin_project(prolongation_, problem_.mass);
}

SystemState CoarseIntegrator::initial(const Vector& u0) const
{
    require(u0.size() == problem_.dofs.size(), "initial state has the wrong length");
    SystemState s;
    s.coefficients = project_initial(problem_.mass, prolongation_, u0 - lifting_);
    s.fine = lifting_ + prolongation_ * s.coefficients;
    return s;
}

SystemState CoarseIntegrator::solve_with_lag(const SystemState& previous, const Vector& lag_fine)
{
    const double dt = controls_.dt;
    const SparseMatrix a = problem_.system_matrix(lag_fine, dt);
    const Vector rhs = problem_.mass * previous.fine / dt + problem_.load - a * lifting_;
    const DenseMatrix coarse = galerkin_project(prolongation_, a);
    const Vector coarse_rhs = galerkin_project(prolongation_, rhs);

    SystemState next;
    next.time = previous.time + dt;
    const Eigen::LLT<DenseMatrix> llt(coarse);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("coarse system at t=" + std::to_string(next.time) + " is not positive definite");
    }
    next.coefficients = llt.solve(coarse_rhs);
    next.coefficients += llt.solve(Vector(coarse_rhs - coarse * next.coefficients));
    next.fine = lifting_ + prolongation_ * next.coefficients;
    if (!next.fine.allFinite()) {
        throw NumericalError("coarse step produced non-finite pressures at t=" + std::to_string(next.time));
    }
    return next;
}

RunResult run(Integrator& integrator, const SparseMatrix& mass, const Vector& u0,
              const std::function<void(const SystemState&)>& observer)
{
    using Clock = std::chrono::steady_clock;
    RunResult result;
    const auto t0 = Clock::now();
    SystemState state = integrator.initial(u0);
    result.states.push_back(state);
    result.diagnostics.push_back(StepDiagnostics{state.time, total_mass(mass, state.fine), 0, true,
                                                 std::chrono::duration<double>(Clock::now() - t0).count()});
    if (observer) {
        observer(state);
    }
    const Index steps = integrator.controls().num_steps();
    for (Index n = 1; n <= steps; ++n) {
        const auto ts = Clock::now();
        StepReport rep;
        state = integrator.step(state, &rep);
        result.diagnostics.push_back(StepDiagnostics{state.time, total_mass(mass, state.fine), rep.iterations,
                                                     rep.converged,
                                                     std::chrono::duration<double>(Clock::now() - ts).count()});
        result.states.push_back(state);
        if (observer) {
            observer(state);
        }
    }
    return result;
}

}  // namespace vugsim
