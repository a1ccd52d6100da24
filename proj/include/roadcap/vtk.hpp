#pragma once

#include "roadcap/mesh.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace roadcap {

struct VtkScalarArray {
    std::string name;
    std::span<const double> values;
};

struct VtkVectorArray {
    std::string name;
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> z;
};

/// Legacy ASCII STRUCTURED_GRID with one point per cell centre and the arrays
/// attached as POINT_DATA. Graded spacing rules out STRUCTURED_POINTS.
void write_vtk_structured(const StructuredMesh& mesh, const std::filesystem::path& path, const std::string& title,
                          const std::vector<VtkScalarArray>& scalars = {}, const std::vector<VtkVectorArray>& vectors = {});

} // namespace roadcap
