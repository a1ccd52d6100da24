#include "roadcap/mesh.hpp"

#include "roadcap/errors.hpp"
#include "roadcap/vtk.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace roadcap {

void GradedAxis::validate() const
{
    if (!(extent > 0.0) || !(min_spacing > 0.0) || !(max_spacing >= min_spacing)) {
        throw ValidationError(fmt::format("graded axis needs extent > 0 and 0 < min <= max spacing (extent {}, min {}, max {})",
                                          extent, min_spacing, max_spacing));
    }
    if (!(extent > 2.0 * min_spacing)) {
        throw ValidationError(fmt::format("graded axis extent {} must exceed twice the min spacing {}", extent, min_spacing));
    }
    if (min_spacing < max_spacing && !(growth_ratio > 1.0)) {
        throw ValidationError("growth ratio must be > 1 when min and max spacing differ");
    }
    if (refined_band.lo < 0.0 || refined_band.hi > extent || refined_band.hi < refined_band.lo) {
        throw ValidationError(fmt::format("refined band [{}, {}] does not fit inside [0, {}]", refined_band.lo,
                                          refined_band.hi, extent));
    }
}

namespace {

// Spacings for one side of the band, ordered from the band outward.
std::vector<double> graded_side(double length, double first, double ratio, double max_spacing)
{
    std::vector<double> cells;
    if (length <= 1e-12 * std::max(1.0, max_spacing)) {
        return cells;
    }
    if (first >= max_spacing || ratio == 1.0) {
        const auto n = static_cast<std::size_t>(std::ceil(length / max_spacing - 1e-9));
        cells.assign(std::max<std::size_t>(n, 1), length / static_cast<double>(std::max<std::size_t>(n, 1)));
        return cells;
    }
    if (length < first * (1.0 - 1e-9)) {
        throw ValidationError(fmt::format("refined band leaves a {} m sliver at the axis end, shorter than the first "
                                          "graded cell ({} m); extend the band to the end or move it",
                                          length, first));
    }

    // Fewest cells of the capped series first r^k (k = 0, 1, ...) that cover
    // the length.
    auto capped_sum = [&](double r, std::size_t n) {
        double sum = 0.0, h = first;
        for (std::size_t k = 0; k < n; ++k) {
            sum += std::min(h, max_spacing);
            h *= r;
        }
        return sum;
    };
    std::size_t n = 0;
    double covered = 0.0;
    for (double h = first; covered < length * (1.0 - 1e-12); h *= ratio) {
        covered += std::min(h, max_spacing);
        ++n;
    }

    if (static_cast<double>(n) * first <= length) {
        // Lower the ratio until the series fills the length exactly, so that
        // no neighbour ratio exceeds the requested one.
        double lo = 1.0, hi = ratio;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (capped_sum(mid, n) < length ? lo : hi) = mid;
        }
        double h = first;
        for (std::size_t k = 0; k < n; ++k) {
            cells.push_back(std::min(h, max_spacing));
            h *= hi;
        }
    } else {
        // Short side: the series itself shrunk to fit.
        double h = first;
        for (std::size_t k = 0; k < n; ++k) {
            cells.push_back(std::min(h, max_spacing));
            h *= ratio;
        }
    }
    double sum = 0.0;
    for (double c : cells) {
        sum += c;
    }
    const double scale = length / sum;
    for (auto& c : cells) {
        c *= scale;
    }
    return cells;
}

std::vector<double> faces_from(const std::vector<double>& spacing)
{
    std::vector<double> f(spacing.size() + 1, 0.0);
    for (std::size_t i = 0; i < spacing.size(); ++i) {
        f[i + 1] = f[i] + spacing[i];
    }
    return f;
}

std::vector<double> centres_from(const std::vector<double>& faces)
{
    std::vector<double> c(faces.size() - 1);
    for (std::size_t i = 0; i + 1 < faces.size(); ++i) {
        c[i] = 0.5 * (faces[i] + faces[i + 1]);
    }
    return c;
}

// Index of the cell containing x; the upper boundary maps to the last cell.
std::optional<std::size_t> locate_on_axis(std::span<const double> faces, double x)
{
    const double lo = faces.front();
    const double hi = faces.back();
    const double tol = 1e-12 * std::max(1.0, hi - lo);
    if (x < lo - tol || x > hi + tol) {
        return std::nullopt;
    }
    auto it = std::upper_bound(faces.begin(), faces.end(), x);
    if (it == faces.begin()) {
        return 0;
    }
    auto idx = static_cast<std::size_t>(std::distance(faces.begin(), it)) - 1;
    return std::min(idx, faces.size() - 2);
}

// Per-cell share of an interval (or of a point when degenerate) along one axis.
std::vector<std::pair<std::size_t, double>> axis_shares(std::span<const double> faces, double lo, double hi)
{
    std::vector<std::pair<std::size_t, double>> shares;
    if (hi <= lo) {
        if (auto c = locate_on_axis(faces, lo)) {
            shares.emplace_back(*c, 1.0);
        }
        return shares;
    }
    const double width = hi - lo;
    for (std::size_t i = 0; i + 1 < faces.size(); ++i) {
        const double overlap = std::min(hi, faces[i + 1]) - std::max(lo, faces[i]);
        if (overlap > 1e-12 * width) {
            shares.emplace_back(i, overlap / width);
        }
    }
    return shares;
}

// Bracketing centres and weight for linear interpolation along one axis.
struct Bracket {
    std::size_t lo;
    std::size_t hi;
    double w_hi;
};

Bracket bracket(std::span<const double> centres, double x)
{
    if (centres.size() == 1 || x <= centres.front()) {
        return {0, 0, 0.0};
    }
    if (x >= centres.back()) {
        return {centres.size() - 1, centres.size() - 1, 0.0};
    }
    auto it = std::upper_bound(centres.begin(), centres.end(), x);
    const auto hi = static_cast<std::size_t>(std::distance(centres.begin(), it));
    const auto lo = hi - 1;
    return {lo, hi, (x - centres[lo]) / (centres[hi] - centres[lo])};
}

} // namespace

std::vector<double> build_axis(const GradedAxis& spec)
{
    spec.validate();
    const auto& band = spec.refined_band;
    std::vector<double> band_cells;
    double first = spec.min_spacing;
    if (band.length() > 0.0) {
        const auto n = static_cast<std::size_t>(std::ceil(band.length() / spec.min_spacing - 1e-9));
        band_cells.assign(n, band.length() / static_cast<double>(n));
        first = band_cells.front() * spec.growth_ratio;
        if (spec.min_spacing == spec.max_spacing) {
            first = spec.max_spacing;
        }
    }
    auto left = graded_side(band.lo, first, spec.growth_ratio, spec.max_spacing);
    auto right = graded_side(spec.extent - band.hi, first, spec.growth_ratio, spec.max_spacing);

    std::vector<double> spacing(left.rbegin(), left.rend());
    spacing.insert(spacing.end(), band_cells.begin(), band_cells.end());
    spacing.insert(spacing.end(), right.begin(), right.end());
    return spacing;
}

MeshSpec mesh_preset(const std::string& name)
{
    MeshSpec spec;
    spec.name = name;
    const RoadStrip road{};
    spec.road = road;
    const Interval road_x{road.x_min, road.x_max};
    if (name == "coarse") {
        spec.x = {1225.5, 2.0, 25.0, 1.2, road_x};
        spec.y = {300.0, 4.0, 25.0, 1.2, {130.0, 170.0}};
        spec.z = {300.0, 1.0, 25.0, 1.2, {0.0, 1.0}};
    } else if (name == "medium") {
        spec.x = {1225.5, 1.0, 12.5, 1.2, road_x};
        spec.y = {300.0, 2.5, 12.5, 1.2, {130.0, 170.0}};
        spec.z = {300.0, 0.5, 12.5, 1.2, {0.0, 1.0}};
    } else if (name == "paper") {
        spec.x = {1225.5, 0.5, 5.0, 1.2, road_x};
        spec.y = {300.0, 0.5, 5.0, 1.2, {146.0, 154.0}};
        spec.z = {300.0, 0.5, 5.0, 1.2, {0.0, 1.0}};
    } else {
        throw ValidationError("unknown mesh preset '" + name + "' (expected coarse, medium or paper)");
    }
    return spec;
}

StructuredMesh::StructuredMesh(std::vector<double> dx, std::vector<double> dy, std::vector<double> dz, RoadStrip road)
    : dx_(std::move(dx))
    , dy_(std::move(dy))
    , dz_(std::move(dz))
    , road_(road)
{
    if (dx_.empty() || dy_.empty() || dz_.empty()) {
        throw ValidationError("mesh needs at least one cell per axis");
    }
    for (const auto* axis : {&dx_, &dy_, &dz_}) {
        for (double h : *axis) {
            if (!(h > 0.0)) {
                throw ValidationError("mesh spacings must be > 0");
            }
        }
    }
    xf_ = faces_from(dx_);
    yf_ = faces_from(dy_);
    zf_ = faces_from(dz_);
    xc_ = centres_from(xf_);
    yc_ = centres_from(yf_);
    zc_ = centres_from(zf_);

    const auto tol = 1e-9;
    if (road_.x_min < -tol || road_.x_max > lx() + tol || road_.y_min < -tol || road_.y_max > ly() + tol ||
        road_.emission_height < 0.0 || road_.emission_height > lz() || road_.x_max < road_.x_min ||
        road_.y_max < road_.y_min) {
        throw ValidationError("road strip lies outside the mesh footprint");
    }
    const auto k = locate_on_axis(zf_, road_.emission_height);
    const auto sx = axis_shares(xf_, road_.x_min, road_.x_max);
    const auto sy = axis_shares(yf_, road_.y_min, road_.y_max);
    for (const auto& [j, wy] : sy) {
        for (const auto& [i, wx] : sx) {
            road_cells_.emplace_back(index(i, j, *k), wx * wy);
        }
    }
}

bool StructuredMesh::contains(const Point3& p) const noexcept
{
    return locate_on_axis(xf_, p.x) && locate_on_axis(yf_, p.y) && locate_on_axis(zf_, p.z);
}

std::optional<std::size_t> StructuredMesh::locate(const Point3& p) const noexcept
{
    const auto i = locate_on_axis(xf_, p.x);
    const auto j = locate_on_axis(yf_, p.y);
    const auto k = locate_on_axis(zf_, p.z);
    if (!i || !j || !k) {
        return std::nullopt;
    }
    return index(*i, *j, *k);
}

std::optional<double> StructuredMesh::interpolate(std::span<const double> field, const Point3& p) const
{
    if (field.size() != cell_count()) {
        throw ValidationError("interpolated field does not match the mesh");
    }
    if (!contains(p)) {
        return std::nullopt;
    }
    const auto bx = bracket(xc_, p.x);
    const auto by = bracket(yc_, p.y);
    const auto bz = bracket(zc_, p.z);
    double value = 0.0;
    for (int c = 0; c < 8; ++c) {
        const bool hx = (c & 1) != 0;
        const bool hy = (c & 2) != 0;
        const bool hz = (c & 4) != 0;
        const double w = (hx ? bx.w_hi : 1.0 - bx.w_hi) * (hy ? by.w_hi : 1.0 - by.w_hi) * (hz ? bz.w_hi : 1.0 - bz.w_hi);
        if (w == 0.0) {
            continue;
        }
        value += w * field[index(hx ? bx.hi : bx.lo, hy ? by.hi : by.lo, hz ? bz.hi : bz.lo)];
    }
    return value;
}

MeshQuality StructuredMesh::quality() const
{
    MeshQuality q;
    for (const auto* axis : {&dx_, &dy_, &dz_}) {
        for (std::size_t i = 1; i < axis->size(); ++i) {
            const double a = (*axis)[i - 1];
            const double b = (*axis)[i];
            q.max_adjacent_ratio = std::max(q.max_adjacent_ratio, std::max(a / b, b / a));
        }
    }
    const auto [dxmin, dxmax] = std::minmax_element(dx_.begin(), dx_.end());
    const auto [dymin, dymax] = std::minmax_element(dy_.begin(), dy_.end());
    const auto [dzmin, dzmax] = std::minmax_element(dz_.begin(), dz_.end());
    q.min_volume = *dxmin * *dymin * *dzmin;
    q.max_volume = *dxmax * *dymax * *dzmax;
    for (double a : dx_) {
        for (double b : {*dymin, *dymax, *dzmin, *dzmax}) {
            q.max_aspect_ratio = std::max(q.max_aspect_ratio, std::max(a / b, b / a));
        }
    }
    for (double a : dy_) {
        for (double b : {*dzmin, *dzmax}) {
            q.max_aspect_ratio = std::max(q.max_aspect_ratio, std::max(a / b, b / a));
        }
    }
    return q;
}

StructuredMesh build_mesh(const MeshSpec& spec)
{
    auto dx = build_axis(spec.x);
    auto dy = build_axis(spec.y);
    auto dz = build_axis(spec.z);
    const auto cells = dx.size() * dy.size() * dz.size();
    if (cells > spec.max_cells) {
        throw ResourceError(fmt::format("mesh '{}' would have {} cells, above the budget of {}", spec.name, cells,
                                        spec.max_cells));
    }
    StructuredMesh mesh(std::move(dx), std::move(dy), std::move(dz), spec.road);
    return mesh;
}

void write_mesh_summary_json(const StructuredMesh& mesh, const MeshSpec& spec, const std::filesystem::path& path)
{
    const auto q = mesh.quality();
    auto axis_json = [](std::span<const double> d, const GradedAxis& a) {
        const auto [mn, mx] = std::minmax_element(d.begin(), d.end());
        return nlohmann::json{{"cells", d.size()},
                              {"extent_m", a.extent},
                              {"min_spacing_m", *mn},
                              {"max_spacing_m", *mx},
                              {"growth_ratio", a.growth_ratio},
                              {"refined_band_m", {a.refined_band.lo, a.refined_band.hi}}};
    };
    nlohmann::json j{
        {"preset", spec.name},
        {"cells", mesh.cell_count()},
        {"dimensions", {mesh.nx(), mesh.ny(), mesh.nz()}},
        {"domain_m", {mesh.lx(), mesh.ly(), mesh.lz()}},
        {"axes", {{"x", axis_json(mesh.dx(), spec.x)}, {"y", axis_json(mesh.dy(), spec.y)}, {"z", axis_json(mesh.dz(), spec.z)}}},
        {"road_cells", mesh.road_cells().size()},
        {"quality",
         {{"max_adjacent_ratio", q.max_adjacent_ratio},
          {"max_aspect_ratio", q.max_aspect_ratio},
          {"min_volume_m3", q.min_volume},
          {"max_volume_m3", q.max_volume},
          {"skewness", q.skewness},
          {"orthogonal_quality", q.orthogonal_quality},
          {"blockage_ratio", q.blockage_ratio}}},
    };
    if (q.blockage_ratio >= 0.05) {
        j["warnings"].push_back("blockage ratio at or above 5%");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

void write_mesh_vtk(const StructuredMesh& mesh, const std::filesystem::path& path)
{
    std::vector<double> volumes(mesh.cell_count());
    for (std::size_t c = 0; c < volumes.size(); ++c) {
        volumes[c] = mesh.volume(c);
    }
    write_vtk_structured(mesh, path, "roadcap mesh cell centres", {{"cell_volume", volumes}});
}

} // namespace roadcap
