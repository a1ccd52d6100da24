#include "roadcap/vtk.hpp"

#include "roadcap/errors.hpp"

#include <fmt/os.h>

namespace roadcap {

void write_vtk_structured(const StructuredMesh& mesh, const std::filesystem::path& path, const std::string& title,
                          const std::vector<VtkScalarArray>& scalars, const std::vector<VtkVectorArray>& vectors)
{
    const auto n = mesh.cell_count();
    for (const auto& s : scalars) {
        if (s.values.size() != n) {
            throw ValidationError("VTK array '" + s.name + "' has the wrong length");
        }
    }
    for (const auto& v : vectors) {
        if (v.x.size() != n || v.y.size() != n || v.z.size() != n) {
            throw ValidationError("VTK array '" + v.name + "' has the wrong length");
        }
    }
    try {
        auto out = fmt::output_file(path.string());
        out.print("# vtk DataFile Version 3.0\n{}\nASCII\nDATASET STRUCTURED_GRID\n", title);
        out.print("DIMENSIONS {} {} {}\n", mesh.nx(), mesh.ny(), mesh.nz());
        out.print("POINTS {} double\n", n);
        for (std::size_t c = 0; c < n; ++c) {
            const auto p = mesh.centre(c);
            out.print("{:.9g} {:.9g} {:.9g}\n", p.x, p.y, p.z);
        }
        if (scalars.empty() && vectors.empty()) {
            return;
        }
        out.print("POINT_DATA {}\n", n);
        for (const auto& s : scalars) {
            out.print("SCALARS {} double 1\nLOOKUP_TABLE default\n", s.name);
            for (double v : s.values) {
                out.print("{:.9g}\n", v);
            }
        }
        for (const auto& v : vectors) {
            out.print("VECTORS {} double\n", v.name);
            for (std::size_t c = 0; c < n; ++c) {
                out.print("{:.9g} {:.9g} {:.9g}\n", v.x[c], v.y[c], v.z[c]);
            }
        }
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

} // namespace roadcap
