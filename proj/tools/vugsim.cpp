// Command-line driver: mesh, basis, run, compare and export subcommands over one scenario file.

#include "vugsim/experiment.hpp"
#include "vugsim/io.hpp"
#include "vugsim/multiscale.hpp"
#include "vugsim/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace vugsim;

namespace {

struct Common {
    std::string config_path;
    std::string out;
    std::string mode = "gmsfem";
};

std::string output_root(const Common& common, const ScenarioConfig& config)
{
    if (!common.out.empty()) {
        return common.out;
    }
    if (const char* env = std::getenv("VUGSIM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return config.output_dir;
}

std::string join(const std::string& dir, const std::string& name)
{
    return (fs::path(dir) / name).string();
}

std::string run_label(const ModeRun& run)
{
    if (run.mode == Mode::Gmsfem) {
        return std::string("gmsfem_L") + std::to_string(run.basis_count);
    }
    return mode_name(run.mode);
}

void print_run_summary(const ModeRun& run)
{
    const auto& diag = run.result.diagnostics;
    Index max_iter = 0;
    bool all_converged = true;
    for (const auto& d : diag) {
        max_iter = std::max(max_iter, d.iterations);
        all_converged = all_converged && d.converged;
    }
    std::printf("mode %s: %lld DOF, %zu steps, offline %.2fs, online %.2fs\n", run_label(run).c_str(),
                static_cast<long long>(run.dofs), diag.size() - 1, run.offline_seconds, run.online_seconds);
    std::printf("total mass %.6e -> %.6e, max iterations per step %lld%s\n", diag.front().mass, diag.back().mass,
                static_cast<long long>(max_iter), all_converged ? "" : " (fixed point did not converge on some steps)");
}

int cmd_mesh(const Common& common)
{
    const ScenarioConfig config = load_config(common.config_path);
    const auto mesh = std::make_shared<const FineMesh>(
        build_fine_mesh(config.domain, config.nx, config.ny, config.network));
    const CoarseGrid grid(mesh, config.mx, config.my);
    Index lines = 0;
    for (const auto& chain : mesh->fracture_edges()) {
        lines += static_cast<Index>(chain.size());
    }
    std::printf("fine mesh: %lld nodes, %lld triangles, %lld fracture edges in %zu fractures, h_min %.6g m\n",
                static_cast<long long>(mesh->num_nodes()), static_cast<long long>(mesh->num_triangles()),
                static_cast<long long>(lines), mesh->fracture_edges().size(), mesh->h_min());
    std::printf("coarse grid: %lldx%lld blocks, %lld nodes\n", static_cast<long long>(grid.mx()),
                static_cast<long long>(grid.my()), static_cast<long long>(grid.num_nodes()));
    const std::string path = join(output_root(common, config), "mesh.vtk");
    write_text_file(path, vtk_mesh(*mesh, &grid));
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_basis(const Common& common, Index basis)
{
    const ScenarioConfig config = load_config(common.config_path);
    const Setup setup = build_setup(config);
    const Index count = basis > 0 ? basis : config.basis_count;
    std::ostringstream csv;
    csv << "neighborhood,index,eigenvalue\r\n";
    if (parse_mode(common.mode) == Mode::Msfem) {
        const MultiscaleSpace space = msfem_space(*setup.grid, setup.problem.medium);
        std::printf("msfem space: %lld DOF\n", static_cast<long long>(space.dim()));
        return 0;
    }
    const auto spectra = compute_spectra(*setup.grid, setup.problem.medium, count);
    BasisSelection sel;
    sel.count = count;
    const MultiscaleSpace space = build_space(*setup.grid, spectra, partition_of_unity(*setup.grid), sel);
    for (const auto& sp : spectra) {
        for (Index k = 0; k < sp.eigenvalues.size(); ++k) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.12g", sp.eigenvalues[k]);
            csv << sp.neighborhood << ',' << k + 1 << ',' << buf << "\r\n";
        }
    }
    std::printf("gmsfem space: %lld basis per neighborhood, %lld DOF, Lambda = %.6e\n", static_cast<long long>(count),
                static_cast<long long>(space.dim()), space.lambda);
    const std::string path = join(output_root(common, config), "eigenvalues.csv");
    write_text_file(path, csv.str());
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_run(const Common& common, Index basis, const std::vector<double>& vtk_days)
{
    const ScenarioConfig config = load_config(common.config_path);
    const Setup setup = build_setup(config);
    const ModeRun run = run_mode(setup, parse_mode(common.mode), basis);
    print_run_summary(run);
    const std::string dir = output_root(common, config);
    const std::string label = run_label(run);
    const std::string series = join(dir, label + "_series.csv");
    write_text_file(series, time_series_csv(run.result, setup.mesh->num_nodes()));
    std::printf("wrote %s\n", series.c_str());
    for (double day : vtk_days) {
        const Index idx = state_index(config.time, day);
        const std::string path = join(dir, label + "_" + day_tag(day) + ".vtk");
        const auto& state = run.result.states[static_cast<std::size_t>(idx)];
        write_text_file(path, vtk_fields(*setup.mesh, state.fine, state.time));
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

int cmd_compare(const Common& common, const std::vector<std::string>& modes, const std::vector<Index>& counts,
                const std::vector<double>& days)
{
    const ScenarioConfig config = load_config(common.config_path);
    std::vector<Mode> parsed;
    for (const auto& m : modes) {
        const Mode mode = parse_mode(m);
        require(mode != Mode::Fine, "compare: fine is always run as the reference; list coarse modes only");
        parsed.push_back(mode);
    }
    for (double d : days) {
        state_index(config.time, d);
    }
    const Setup setup = build_setup(config);
    const ErrorReport report = compare(setup, parsed, counts, days);
    std::cout << report.table();
    for (const auto& [label, seconds] : report.runtimes) {
        std::printf("runtime %-8s %.2fs\n", label.c_str(), seconds);
    }
    const std::string path = join(output_root(common, config), "errors.csv");
    write_text_file(path, report.csv());
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_export(const Common& common, Index basis, const std::vector<double>& days, const std::string& format)
{
    const ScenarioConfig config = load_config(common.config_path);
    require(format == "csv" || format == "vtk", "--format must be csv or vtk");
    for (double d : days) {
        state_index(config.time, d);
    }
    const Setup setup = build_setup(config);
    const ModeRun run = run_mode(setup, parse_mode(common.mode), basis);
    const std::string dir = output_root(common, config);
    const std::string label = run_label(run);
    const Index n = setup.mesh->num_nodes();
    for (double day : days) {
        const auto& state = run.result.states[static_cast<std::size_t>(state_index(config.time, day))];
        const std::string path = join(dir, label + "_" + day_tag(day) + "." + format);
        if (format == "vtk") {
            write_text_file(path, vtk_fields(*setup.mesh, state.fine, state.time));
        } else {
            std::ostringstream csv;
            csv << "node,x,y,matrix,fracture,vug\r\n";
            char buf[160];
            for (Index i = 0; i < n; ++i) {
                const Point& p = setup.mesh->node(i);
                std::snprintf(buf, sizeof buf, "%lld,%.12g,%.12g,%.12g,%.12g,%.12g\r\n", static_cast<long long>(i),
                              p.x, p.y, state.fine[i], state.fine[n + i], state.fine[2 * n + i]);
                csv << buf;
            }
            write_text_file(path, csv.str());
        }
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Triple-continuum flow with discrete fractures: fine-scale and multiscale solvers"};
    app.require_subcommand(1);

    Common common;
    Index basis = 0;
    std::vector<Index> basis_list{2, 4, 8, 16};
    std::vector<double> days{1.0, 10.0, 20.0};
    std::vector<double> vtk_days;
    std::vector<std::string> modes{"gmsfem", "msfem"};
    std::string format = "vtk";

    auto add_common = [&](CLI::App* sub, bool with_mode) {
        sub->add_option("config", common.config_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "Output directory (overrides VUGSIM_OUTPUT_DIR and the config)");
        if (with_mode) {
            sub->add_option("--mode", common.mode, "fine, gmsfem or msfem")
                ->check(CLI::IsMember({"fine", "gmsfem", "msfem"}));
        }
    };

    auto* mesh = app.add_subcommand("mesh", "Build the fine mesh and coarse grid, write mesh.vtk");
    add_common(mesh, false);

    auto* basis_cmd = app.add_subcommand("basis", "Offline stage: local spectra and the multiscale space");
    add_common(basis_cmd, true);
    basis_cmd->add_option("--basis", basis, "Basis functions per neighborhood (default: config)");

    auto* run_cmd = app.add_subcommand("run", "Time integration in one mode");
    add_common(run_cmd, true);
    run_cmd->add_option("--basis", basis, "Basis functions per neighborhood (default: config)");
    run_cmd->add_option("--vtk-days", vtk_days, "Days to write as VTK fields")->delimiter(',');

    auto* compare_cmd = app.add_subcommand("compare", "Fine reference against coarse modes; L2 error table");
    add_common(compare_cmd, false);
    compare_cmd->add_option("--modes", modes, "Coarse modes")->delimiter(',');
    compare_cmd->add_option("--basis", basis_list, "GMsFEM basis counts")->delimiter(',');
    compare_cmd->add_option("--days", days, "Report days")->delimiter(',');

    auto* export_cmd = app.add_subcommand("export", "Run one mode and write nodal fields at selected days");
    add_common(export_cmd, true);
    export_cmd->add_option("--basis", basis, "Basis functions per neighborhood (default: config)");
    export_cmd->add_option("--days", days, "Days to export")->delimiter(',');
    export_cmd->add_option("--format", format, "csv or vtk")->check(CLI::IsMember({"csv", "vtk"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*mesh) {
            return cmd_mesh(common);
        }
        if (*basis_cmd) {
            return cmd_basis(common, basis);
        }
        if (*run_cmd) {
            return cmd_run(common, basis, vtk_days);
        }
        if (*compare_cmd) {
            return cmd_compare(common, modes, basis_list, days);
        }
        if (*export_cmd) {
            return cmd_export(common, basis, days, format);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
