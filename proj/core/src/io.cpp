#include "vugsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vugsim {

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Header, points and cells shared by the mesh and field files.
void write_geometry(std::ostringstream& out, const FineMesh& mesh, const std::string& title)
{
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& p : mesh.nodes()) {
        out << fmt(p.x) << ' ' << fmt(p.y) << " 0\n";
    }
    Index lines = 0;
    for (const auto& chain : mesh.fracture_edges()) {
        lines += static_cast<Index>(chain.size());
    }
    const Index cells = mesh.num_triangles() + lines;
    out << "CELLS " << cells << ' ' << 4 * mesh.num_triangles() + 3 * lines << '\n';
    for (const auto& t : mesh.triangles()) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    for (const auto& chain : mesh.fracture_edges()) {
        for (Index e : chain) {
            out << "2 " << mesh.edge(e).nodes[0] << ' ' << mesh.edge(e).nodes[1] << '\n';
        }
    }
    out << "CELL_TYPES " << cells << '\n';
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "5\n";
    }
    for (Index l = 0; l < lines; ++l) {
        out << "3\n";
    }
}

void write_cell_ids(std::ostringstream& out, const FineMesh& mesh, const CoarseGrid* grid)
{
    Index lines = 0;
    for (const auto& chain : mesh.fracture_edges()) {
        lines += static_cast<Index>(chain.size());
    }
    out << "CELL_DATA " << mesh.num_triangles() + lines << '\n';
    out << "SCALARS block_id int 1\nLOOKUP_TABLE default\n";
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        out << (grid ? grid->triangle_block(t) : -1) << '\n';
    }
    for (Index l = 0; l < lines; ++l) {
        out << "-1\n";
    }
    out << "SCALARS fracture_id int 1\nLOOKUP_TABLE default\n";
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "-1\n";
    }
    for (std::size_t f = 0; f < mesh.fracture_edges().size(); ++f) {
        for (std::size_t k = 0; k < mesh.fracture_edges()[f].size(); ++k) {
            out << f << '\n';
        }
    }
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content)
{
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw ValidationError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << content;
    out.close();
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

std::string vtk_mesh(const FineMesh& mesh, const CoarseGrid* grid)
{
    std::ostringstream out;
    write_geometry(out, mesh, "vugsim mesh");
    write_cell_ids(out, mesh, grid);
    return out.str();
}

std::string vtk_fields(const FineMesh& mesh, const Vector& u, double time)
{
    const Index n = mesh.num_nodes();
    require(u.size() == kContinua * n, "vtk_fields: field does not match the mesh");
    std::ostringstream out;
    write_geometry(out, mesh, "vugsim pressure t=" + fmt(time) + " days");
    out << "POINT_DATA " << n << '\n';
    for (int c = 0; c < kContinua; ++c) {
        out << "SCALARS pressure_" << continuum_name(c) << " double 1\nLOOKUP_TABLE default\n";
        for (Index i = 0; i < n; ++i) {
            out << fmt(u[c * n + i]) << '\n';
        }
    }
    return out.str();
}

std::string time_series_csv(const RunResult& result, Index num_nodes)
{
    std::ostringstream out;
    out << "t";
    for (int c = 0; c < kContinua; ++c) {
        const std::string name = continuum_name(c);
        out << ',' << name << "_min," << name << "_mean," << name << "_max";
    }
    out << ",total_mass,iterations\r\n";
    for (std::size_t k = 0; k < result.states.size(); ++k) {
        const auto& s = result.states[k];
        out << fmt(s.time);
        for (int c = 0; c < kContinua; ++c) {
            const auto seg = s.fine.segment(c * num_nodes, num_nodes);
            out << ',' << fmt(seg.minCoeff()) << ',' << fmt(seg.mean()) << ',' << fmt(seg.maxCoeff());
        }
        const auto& d = result.diagnostics[k];
        out << ',' << fmt(d.mass) << ',' << d.iterations << "\r\n";
    }
    return out.str();
}

std::string day_tag(double day)
{
    const double whole = std::floor(day);
    char buf[48];
    if (day == whole) {
        std::snprintf(buf, sizeof buf, "day%04lld", static_cast<long long>(whole));
    } else {
        std::snprintf(buf, sizeof buf, "day%06.6g", day);
    }
    return buf;
}

}  // namespace vugsim
