#pragma once

#include "vugsim/geometry.hpp"
#include "vugsim/timestepper.hpp"

#include <string>

namespace vugsim {

/// Creates parent directories and writes `content`; throws ValidationError if the path is not writable.
void write_text_file(const std::string& path, const std::string& content);

/// Legacy ASCII VTK: triangles and fracture line cells, with block id and fracture id cell data
/// (-1 where not applicable). `grid` may be null.
std::string vtk_mesh(const FineMesh& mesh, const CoarseGrid* grid);

/// Same cells plus per-continuum nodal pressures as point data.
std::string vtk_fields(const FineMesh& mesh, const Vector& u, double time);

/// One row per state: t, min/mean/max pressure per continuum, total b-mass, iterations.
std::string time_series_csv(const RunResult& result, Index num_nodes);

/// Fixed-width decimal file-name tag for a day, e.g. 1 -> "day0001", 2.5 -> "day0002.5".
std::string day_tag(double day);

}  // namespace vugsim
