#include "vugsim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace vugsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_number(double v, const char* fmt)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

Mode parse_mode(const std::string& name)
{
    if (name == "fine") {
        return Mode::Fine;
    }
    if (name == "gmsfem") {
        return Mode::Gmsfem;
    }
    if (name == "msfem") {
        return Mode::Msfem;
    }
    throw ValidationError("unknown mode '" + name + "' (expected fine, gmsfem or msfem)");
}

const char* mode_name(Mode mode)
{
    switch (mode) {
    case Mode::Fine: return "fine";
    case Mode::Gmsfem: return "gmsfem";
    case Mode::Msfem: return "msfem";
    }
    return "unknown";
}

Medium build_medium(const ScenarioConfig& config, const FineMesh& mesh)
{
    Medium medium;
    medium.fluid = config.fluid;
    medium.network = config.network;
    const Index nt = mesh.num_triangles();
    for (int c = 0; c < kContinua; ++c) {
        const auto& spec = config.continua[static_cast<std::size_t>(c)];
        std::vector<double> kappa;
        switch (spec.permeability.kind) {
        case PermeabilitySpec::Kind::Constant:
            kappa.assign(static_cast<std::size_t>(nt), spec.permeability.value);
            break;
        case PermeabilitySpec::Kind::Synthetic:
            require(mesh.is_lattice(), "synthetic permeability needs a lattice mesh");
            kappa = synth_permeability(spec.permeability.seed, mesh.nx(), mesh.ny(), spec.permeability.contrast,
                                       spec.permeability.minimum);
            break;
        case PermeabilitySpec::Kind::Csv:
            kappa = load_permeability_csv(spec.permeability.path, nt);
            break;
        }
        medium.continua[static_cast<std::size_t>(c)] =
            ContinuumParams(static_cast<Continuum>(c), spec.porosity, std::move(kappa), config.fluid);
    }
    const double sigma = config.shape_factor > 0.0 ? config.shape_factor : shape_factor_from_mesh(mesh.h_min());
    medium.exchange = exchange_coefficients(medium.continua, sigma, config.fluid.viscosity);
    return medium;
}

SourceSpec build_sources(const ScenarioConfig& config)
{
    SourceSpec sources;
    sources.wells = config.wells;
    for (std::size_t s = 0; s < kSides.size(); ++s) {
        const auto& b = config.boundary[s];
        if (b.kind == BoundarySpec::Kind::Neumann && b.value != 0.0) {
            NeumannFlux flux;
            flux.side = kSides[s];
            flux.flux = b.value;
            sources.neumann.push_back(flux);
        }
    }
    return sources;
}

DofMap build_dofs(const ScenarioConfig& config, const FineMesh& mesh)
{
    std::map<unsigned, double> sides;
    for (std::size_t s = 0; s < kSides.size(); ++s) {
        if (config.boundary[s].kind == BoundarySpec::Kind::Dirichlet) {
            sides[kSides[s]] = config.boundary[s].value;
        }
    }
    return dirichlet_from_sides(mesh, sides);
}

Setup build_setup(const ScenarioConfig& config)
{
    config.validate();
    Setup setup;
    setup.config = config;
    setup.mesh = std::make_shared<const FineMesh>(build_fine_mesh(config.domain, config.nx, config.ny, config.network));
    setup.grid = std::make_shared<const CoarseGrid>(setup.mesh, config.mx, config.my);
    setup.problem = FlowProblem::make(setup.mesh, build_medium(config, *setup.mesh), build_sources(config),
                                      build_dofs(config, *setup.mesh));
    setup.initial = Vector::Constant(setup.problem.dofs.size(), config.initial_pressure);
    return setup;
}

ModeRun run_fine(const Setup& setup)
{
    ModeRun out;
    out.mode = Mode::Fine;
    out.dofs = setup.problem.dofs.size();
    out.lambda = std::numeric_limits<double>::quiet_NaN();
    const auto t0 = Clock::now();
    FineIntegrator integrator(setup.problem, setup.config.time);
    out.result = run(integrator, setup.problem.mass, setup.initial);
    out.online_seconds = seconds_since(t0);
    return out;
}

ModeRun run_coarse(const Setup& setup, Mode mode, const MultiscaleSpace& space, Index basis_count)
{
    ModeRun out;
    out.mode = mode;
    out.basis_count = basis_count;
    out.dofs = space.dim();
    out.lambda = space.lambda;
    const auto t0 = Clock::now();
    const Vector lifting = dirichlet_lifting(*setup.grid, setup.problem.dofs);
    CoarseIntegrator integrator(setup.problem, space, lifting, setup.config.time);
    out.result = run(integrator, setup.problem.mass, setup.initial);
    out.online_seconds = seconds_since(t0);
    return out;
}

ModeRun run_mode(const Setup& setup, Mode mode, Index basis_count)
{
    if (mode == Mode::Fine) {
        return run_fine(setup);
    }
    const auto t0 = Clock::now();
    MultiscaleSpace space;
    Index count = 0;
    if (mode == Mode::Gmsfem) {
        count = basis_count > 0 ? basis_count : setup.config.basis_count;
        BasisSelection sel;
        sel.count = count;
        if (basis_count <= 0 && setup.config.basis_threshold > 0.0) {
            sel.eigenvalue_threshold = setup.config.basis_threshold;
        }
        space = gmsfem_space(*setup.grid, setup.problem.medium, sel);
    } else {
        space = msfem_space(*setup.grid, setup.problem.medium);
    }
    const double offline = seconds_since(t0);
    ModeRun out = run_coarse(setup, mode, space, count);
    out.offline_seconds = offline;
    return out;
}

SparseMatrix p1_mass(const FineMesh& mesh)
{
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9 * mesh.num_triangles()));
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double a = mesh.area(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trip.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)],
                                  a * (i == j ? 2.0 : 1.0) / 12.0);
            }
        }
    }
    SparseMatrix m(mesh.num_nodes(), mesh.num_nodes());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

ContinuumErrors l2_relative_error(const SparseMatrix& p1, const Vector& approx, const Vector& reference)
{
    const Index n = p1.rows();
    require(approx.size() == kContinua * n && reference.size() == kContinua * n,
            "l2_relative_error: fields do not match the mesh");
    ContinuumErrors out{};
    double num_total = 0.0;
    double den_total = 0.0;
    for (int c = 0; c < kContinua; ++c) {
        const Vector r = reference.segment(c * n, n);
        const Vector e = approx.segment(c * n, n) - r;
        const double num = e.dot(p1 * e);
        const double den = r.dot(p1 * r);
        if (!(den > 0.0)) {
            throw ValidationError(std::string("l2_relative_error: zero reference norm in the ") + continuum_name(c) +
                                  " continuum");
        }
        out[static_cast<std::size_t>(c)] = 100.0 * std::sqrt(std::max(num, 0.0) / den);
        num_total += num;
        den_total += den;
    }
    out[kContinua] = 100.0 * std::sqrt(std::max(num_total, 0.0) / den_total);
    return out;
}

ContinuumErrors l2_relative_error(const FineMesh& mesh, const Vector& approx, const Vector& reference)
{
    return l2_relative_error(p1_mass(mesh), approx, reference);
}

Index state_index(const TimeControls& controls, double day)
{
    if (!(day > 0.0) || day > controls.final_time * (1.0 + 1e-12)) {
        throw ValidationError("report day " + format_number(day, "%g") + " outside (0, T] with T = " +
                              format_number(controls.final_time, "%g"));
    }
    const double steps = day / controls.dt;
    const auto idx = static_cast<Index>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(idx)) > 1e-9 * std::max(1.0, steps)) {
        throw ValidationError("report day " + format_number(day, "%g") + " is not a multiple of dt = " +
                              format_number(controls.dt, "%g"));
    }
    return idx;
}

double ErrorReport::combined(const std::string& basis, double day) const
{
    for (const auto& row : rows) {
        if (row.basis == basis && row.day == day) {
            return row.errors[kContinua];
        }
    }
    throw ValidationError("no error row for basis " + basis + " at day " + format_number(day, "%g"));
}

std::string ErrorReport::table() const
{
    std::ostringstream out;
    std::vector<std::string> labels;
    for (const auto& row : rows) {
        if (std::find(labels.begin(), labels.end(), row.basis) == labels.end()) {
            labels.push_back(row.basis);
        }
    }
    out << "L2 relative error (%), all continua; fine DOF = " << fine_dofs << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s %8s", "basis", "DOF");
    out << buf;
    for (double d : days) {
        std::snprintf(buf, sizeof buf, " %10s", ("Day " + format_number(d, "%g")).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %12s", "Lambda");
    out << buf << "\n";
    for (const auto& label : labels) {
        const auto dof_it = dofs.find(label);
        std::snprintf(buf, sizeof buf, "%-8s %8lld", label.c_str(),
                      static_cast<long long>(dof_it == dofs.end() ? 0 : dof_it->second));
        out << buf;
        for (double d : days) {
            std::snprintf(buf, sizeof buf, " %10.2f", combined(label, d));
            out << buf;
        }
        const auto lam = lambda.find(label);
        if (lam != lambda.end() && std::isfinite(lam->second)) {
            std::snprintf(buf, sizeof buf, " %12.4e", lam->second);
        } else {
            std::snprintf(buf, sizeof buf, " %12s", "-");
        }
        out << buf << "\n";
    }
    return out.str();
}

std::string ErrorReport::csv() const
{
    std::ostringstream out;
    out << "basis,day,continuum,error_pct\r\n";
    for (const auto& row : rows) {
        for (int c = 0; c <= kContinua; ++c) {
            out << row.basis << ',' << format_number(row.day, "%.10g") << ',' << continuum_name(c) << ','
                << format_number(row.errors[static_cast<std::size_t>(c)], "%.10g") << "\r\n";
        }
    }
    return out.str();
}

ErrorReport compare(const Setup& setup, const std::vector<Mode>& modes, const std::vector<Index>& basis_counts,
                    const std::vector<double>& days)
{
    require(!days.empty(), "compare needs at least one report day");
    std::vector<Index> indices;
    for (double d : days) {
        indices.push_back(state_index(setup.config.time, d));
    }
    for (Index b : basis_counts) {
        require(b >= 1, "basis counts must be at least 1");
    }

    ErrorReport report;
    report.days = days;
    const ModeRun fine = run_fine(setup);
    report.fine_dofs = fine.dofs;
    report.runtimes["fine"] = fine.online_seconds;
    const SparseMatrix p1 = p1_mass(*setup.mesh);

    auto add_rows = [&](const std::string& label, const ModeRun& run) {
        report.dofs[label] = run.dofs;
        report.runtimes[label] = run.offline_seconds + run.online_seconds;
        if (run.mode == Mode::Gmsfem) {
            report.lambda[label] = run.lambda;
        }
        for (std::size_t k = 0; k < days.size(); ++k) {
            const auto idx = static_cast<std::size_t>(indices[k]);
            report.rows.push_back(ErrorRow{
                label, days[k], l2_relative_error(p1, run.result.states[idx].fine, fine.result.states[idx].fine)});
        }
    };

    for (Mode mode : modes) {
        if (mode == Mode::Gmsfem && !basis_counts.empty()) {
            const auto t0 = Clock::now();
            const Index max_count = *std::max_element(basis_counts.begin(), basis_counts.end());
            const auto spectra = compute_spectra(*setup.grid, setup.problem.medium, max_count);
            const auto chi = partition_of_unity(*setup.grid);
            const double shared_offline = seconds_since(t0);
            for (Index count : basis_counts) {
                const auto tb = Clock::now();
                BasisSelection sel;
                sel.count = count;
                const MultiscaleSpace space = build_space(*setup.grid, spectra, chi, sel);
                const double build = seconds_since(tb);
                ModeRun run = run_coarse(setup, Mode::Gmsfem, space, count);
                run.offline_seconds = shared_offline + build;
                add_rows(std::to_string(count), run);
            }
        } else if (mode == Mode::Msfem) {
            add_rows("msfem", run_mode(setup, Mode::Msfem));
        }
    }
    return report;
}

std::vector<SweepPoint> steady_energy_sweep(const Setup& setup, const std::vector<Index>& counts)
{
    require(!counts.empty(), "steady_energy_sweep needs basis counts");
    const FineMesh& mesh = *setup.mesh;
    const Medium& medium = setup.problem.medium;
    const DofMap& dofs = setup.problem.dofs;
    const SparseMatrix a = SparseMatrix(assemble_reference_stiffness(mesh, medium, Region::whole(mesh)) +
                                        setup.problem.exchange);
    const Vector& f = setup.problem.load;

    const ReducedSystem sys = apply_dirichlet(a, f, dofs);
    const SparseCholesky chol(sys.matrix);
    const Vector u = sys.expand(chol.solve(sys.rhs));
    const double norm_u = std::sqrt(std::max(0.0, u.dot(a * u)));

    const Index max_count = *std::max_element(counts.begin(), counts.end());
    const auto spectra = compute_spectra(*setup.grid, medium, max_count);
    const auto chi = partition_of_unity(*setup.grid);
    const Vector g = dirichlet_lifting(*setup.grid, dofs);

    std::vector<SweepPoint> out;
    for (Index count : counts) {
        BasisSelection sel;
        sel.count = count;
        const MultiscaleSpace space = build_space(*setup.grid, spectra, chi, sel);
        const SparseMatrix pm = mask_rows(space.prolongation, dofs);
        const DenseMatrix coarse = galerkin_project(pm, a);
        const Vector rhs = galerkin_project(pm, Vector(f - a * g));
        const Vector ums = g + pm * solve_dense_spd(coarse, rhs);
        const Vector e = u - ums;
        SweepPoint p;
        p.count = count;
        p.dofs = space.dim();
        p.lambda = space.lambda;
        p.energy_error = std::sqrt(std::max(0.0, e.dot(a * e)));
        p.relative_error = norm_u > 0.0 ? p.energy_error / norm_u : 0.0;
        out.push_back(p);
    }
    return out;
}

}  // namespace vugsim
