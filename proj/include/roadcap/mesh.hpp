#pragma once

// Graded structured Cartesian finite-volume grids over the highway corridor.
//
// Axis convention: x crosses the road in the wind direction (inlet at x = 0),
// y runs along the road, z is height above ground.

#include "roadcap/fleet.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roadcap {

struct Interval {
    double lo{0.0};
    double hi{0.0};

    [[nodiscard]] double length() const noexcept { return hi - lo; }
};

/// One axis of a graded grid. Cells inside the refined band have (at most)
/// min_spacing; outside they grow geometrically by growth_ratio up to
/// max_spacing. An empty band [a, a] starts the growth at a with min_spacing.
struct GradedAxis {
    double extent{0.0};
    double min_spacing{0.0};
    double max_spacing{0.0};
    double growth_ratio{1.2};
    Interval refined_band{};

    void validate() const;
};

/// Spacing list for one axis, in increasing coordinate order.
[[nodiscard]] std::vector<double> build_axis(const GradedAxis& spec);

struct Point3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};
};

struct MeshSpec {
    std::string name{"custom"};
    GradedAxis x;
    GradedAxis y;
    GradedAxis z;
    RoadStrip road{};
    std::size_t max_cells{5'000'000};
};

/// Named presets: "coarse" (~6e4 cells), "medium" (~2.5e5) and "paper"
/// (~1.9e6, the 0.5 m / 5 m / 1.2 grading of the reference study).
[[nodiscard]] MeshSpec mesh_preset(const std::string& name);

/// Reference cell count of the study mesh the "paper" preset approximates.
inline constexpr std::size_t reference_study_cell_count = 1'778'130;

struct MeshQuality {
    double max_adjacent_ratio{1.0};
    double max_aspect_ratio{1.0};
    double min_volume{0.0};
    double max_volume{0.0};
    // Cartesian cells are ideal by construction.
    double skewness{0.0};
    double orthogonal_quality{1.0};
    double blockage_ratio{0.0};
};

class StructuredMesh {
public:
    StructuredMesh(std::vector<double> dx, std::vector<double> dy, std::vector<double> dz, RoadStrip road = {});

    [[nodiscard]] std::size_t nx() const noexcept { return dx_.size(); }
    [[nodiscard]] std::size_t ny() const noexcept { return dy_.size(); }
    [[nodiscard]] std::size_t nz() const noexcept { return dz_.size(); }
    [[nodiscard]] std::size_t cell_count() const noexcept { return nx() * ny() * nz(); }

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + nx() * (j + ny() * k);
    }
    [[nodiscard]] std::array<std::size_t, 3> ijk(std::size_t cell) const noexcept
    {
        return {cell % nx(), (cell / nx()) % ny(), cell / (nx() * ny())};
    }

    [[nodiscard]] std::span<const double> dx() const noexcept { return dx_; }
    [[nodiscard]] std::span<const double> dy() const noexcept { return dy_; }
    [[nodiscard]] std::span<const double> dz() const noexcept { return dz_; }
    /// Face coordinates, size n + 1 per axis.
    [[nodiscard]] std::span<const double> xf() const noexcept { return xf_; }
    [[nodiscard]] std::span<const double> yf() const noexcept { return yf_; }
    [[nodiscard]] std::span<const double> zf() const noexcept { return zf_; }
    /// Cell-centre coordinates.
    [[nodiscard]] std::span<const double> xc() const noexcept { return xc_; }
    [[nodiscard]] std::span<const double> yc() const noexcept { return yc_; }
    [[nodiscard]] std::span<const double> zc() const noexcept { return zc_; }

    [[nodiscard]] double lx() const noexcept { return xf_.back(); }
    [[nodiscard]] double ly() const noexcept { return yf_.back(); }
    [[nodiscard]] double lz() const noexcept { return zf_.back(); }

    [[nodiscard]] double volume(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return dx_[i] * dy_[j] * dz_[k];
    }
    [[nodiscard]] double volume(std::size_t cell) const noexcept
    {
        const auto [i, j, k] = ijk(cell);
        return volume(i, j, k);
    }
    [[nodiscard]] Point3 centre(std::size_t cell) const noexcept
    {
        const auto [i, j, k] = ijk(cell);
        return {xc_[i], yc_[j], zc_[k]};
    }

    [[nodiscard]] const RoadStrip& road() const noexcept { return road_; }

    /// Cells holding the road source with the share of the strip each one
    /// receives (shares sum to 1). Point sources map to the containing cell.
    [[nodiscard]] const std::vector<std::pair<std::size_t, double>>& road_cells() const noexcept { return road_cells_; }

    [[nodiscard]] bool contains(const Point3& p) const noexcept;
    /// Cell containing p (boundary points map to the adjacent cell); nullopt outside.
    [[nodiscard]] std::optional<std::size_t> locate(const Point3& p) const noexcept;

    /// Trilinear interpolation between cell centres; constant extrapolation
    /// between the outermost centres and the boundary. nullopt outside.
    [[nodiscard]] std::optional<double> interpolate(std::span<const double> field, const Point3& p) const;

    [[nodiscard]] MeshQuality quality() const;

private:
    std::vector<double> dx_, dy_, dz_;
    std::vector<double> xf_, yf_, zf_;
    std::vector<double> xc_, yc_, zc_;
    RoadStrip road_;
    std::vector<std::pair<std::size_t, double>> road_cells_;
};

/// Throws ValidationError when the road lies outside the footprint and
/// ResourceError when the cell count exceeds spec.max_cells.
[[nodiscard]] StructuredMesh build_mesh(const MeshSpec& spec);

void write_mesh_summary_json(const StructuredMesh& mesh, const MeshSpec& spec, const std::filesystem::path& path);

/// Legacy ASCII VTK structured grid whose points are the cell centres.
void write_mesh_vtk(const StructuredMesh& mesh, const std::filesystem::path& path);

} // namespace roadcap
