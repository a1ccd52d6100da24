#include "roadcap/dispersion.hpp"

#include "csv.hpp"
#include "roadcap/errors.hpp"
#include "roadcap/linear_solver.hpp"
#include "roadcap/vtk.hpp"
#include "transport_assembly.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadcap {

void DispersionConfig::validate() const
{
    if (!(turbulent_schmidt > 0.0) || !(molecular_schmidt > 0.0)) {
        throw ValidationError("Schmidt numbers must be > 0");
    }
    if (!(particle_density > 0.0)) {
        throw ValidationError("particle density must be > 0");
    }
    if (constant_diffusivity && !(*constant_diffusivity > 0.0)) {
        throw ValidationError("constant diffusivity must be > 0");
    }
    if (!(tolerance > 0.0) || !(linear_rel_tol > 0.0) || linear_max_iterations < 1) {
        throw ValidationError("dispersion solver tolerances must be > 0");
    }
}

namespace {

double gravity_magnitude(const FluidProperties& fluid)
{
    const auto& g = fluid.gravity;
    return std::sqrt(g.x * g.x + g.y * g.y + g.z * g.z);
}

} // namespace

double settling_velocity(const Pollutant& p, double particle_density, const FluidProperties& fluid)
{
    if (!p.is_particulate) {
        return 0.0;
    }
    const double d = p.particle_diameter;
    const double ws = (particle_density - fluid.density) * gravity_magnitude(fluid) * d * d / (18.0 * fluid.viscosity);
    return std::max(ws, 0.0);
}

double settling_reynolds(const Pollutant& p, double particle_density, const FluidProperties& fluid)
{
    return fluid.density * settling_velocity(p, particle_density, fluid) * p.particle_diameter / fluid.viscosity;
}

SpeciesField solve_scalar(const FlowState& flow, const StructuredMesh& mesh, const SourceSpec& source,
                          const Pollutant& pollutant, const FluidProperties& fluid, const DispersionConfig& cfg)
{
    cfg.validate();
    fluid.validate();
    const auto n = mesh.cell_count();
    if (flow.u.size() != n || flow.nx != mesh.nx() || flow.ny != mesh.ny() || flow.nz != mesh.nz()) {
        throw ValidationError("flow state does not match the mesh");
    }
    const auto& road = source.geometry;
    for (const Point3 corner : {Point3{road.x_min, road.y_min, road.emission_height},
                                Point3{road.x_max, road.y_max, road.emission_height}}) {
        if (!mesh.contains(corner)) {
            throw ValidationError("source geometry lies outside the mesh");
        }
    }

    SpeciesField field;
    field.pollutant = pollutant;
    field.source_rate = source.rate_kg_per_s[pollutant.id];
    if (field.source_rate < 0.0) {
        throw ValidationError("source rate must be >= 0");
    }
    field.settling_velocity = cfg.gravitational_settling ? settling_velocity(pollutant, cfg.particle_density, fluid) : 0.0;

    std::vector<double> gamma(n);
    const double nu = fluid.viscosity / fluid.density;
    for (std::size_t c = 0; c < n; ++c) {
        gamma[c] = cfg.constant_diffusivity ? *cfg.constant_diffusivity
                                            : nu / cfg.molecular_schmidt +
                                                  flow.mu_t[c] / (fluid.density * cfg.turbulent_schmidt);
    }

    // Settling adds a uniform downward volumetric flux on every z face
    // except the top boundary, which stays closed.
    const FlowState* transport = &flow;
    FlowState settled;
    if (field.settling_velocity > 0.0) {
        settled.nx = flow.nx;
        settled.ny = flow.ny;
        settled.nz = flow.nz;
        settled.fx = flow.fx;
        settled.fy = flow.fy;
        settled.fz = flow.fz;
        for (std::size_t k = 0; k < flow.nz; ++k) {
            for (std::size_t j = 0; j < flow.ny; ++j) {
                for (std::size_t i = 0; i < flow.nx; ++i) {
                    settled.fz[settled.fz_index(i, j, k)] -= field.settling_velocity * mesh.dx()[i] * mesh.dy()[j];
                }
            }
        }
        transport = &settled;
    }

    using detail::FaceTreatment;
    detail::SideConditions bcs;
    for (auto& bc : bcs) {
        bc.treatment = FaceTreatment::outflow;
    }
    bcs[static_cast<std::size_t>(detail::Side::xmin)].treatment = FaceTreatment::fixed_value;

    StencilMatrix a(mesh.nx(), mesh.ny(), mesh.nz());
    detail::assemble_convection_diffusion(mesh, *transport, 1.0, gamma, bcs, a);
    for (const auto& [cell, share] : mesh.road_cells()) {
        a.b[cell] += field.source_rate * share;
    }

    field.concentration.assign(n, 0.0);
    if (field.source_rate > 0.0) {
        const auto stats = solve_bicgstab(a, field.concentration, cfg.linear_rel_tol, 0.0, cfg.linear_max_iterations);
        field.linear_iterations = stats.iterations;
    }
    double cmax = 0.0;
    for (double c : field.concentration) {
        if (!std::isfinite(c)) {
            throw DivergenceError(std::string(pollutant_name(pollutant.id)), field.linear_iterations);
        }
        cmax = std::max(cmax, c);
    }
    for (auto& c : field.concentration) {
        if (c < 0.0) {
            // Round-off sized undershoots are zeroed; anything larger means the
            // upwind operator lost its positivity.
            if (c < -1e-9 * cmax) {
                throw std::logic_error(fmt::format("negative concentration {} for {}", c, pollutant_name(pollutant.id)));
            }
            c = 0.0;
        }
    }
    const double num = a.absolute_residual_sum(field.concentration);
    double den = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        den += a.ap[c] * field.concentration[c];
    }
    field.residual = num == 0.0 ? 0.0 : (den > 0.0 ? num / den : num);
    field.converged = field.residual < cfg.tolerance;
    return field;
}

double boundary_mass_outflow(const SpeciesField& field, const FlowState& flow, const StructuredMesh& mesh)
{
    const auto nx = mesh.nx(), ny = mesh.ny(), nz = mesh.nz();
    const auto& c = field.concentration;
    double out = 0.0;
    auto leave = [&](double outward_flux, std::size_t cell) {
        if (outward_flux > 0.0) {
            out += outward_flux * c[cell];
        }
    };
    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            leave(-flow.fx[flow.fx_index(0, j, k)], mesh.index(0, j, k));
            leave(flow.fx[flow.fx_index(nx, j, k)], mesh.index(nx - 1, j, k));
        }
        for (std::size_t i = 0; i < nx; ++i) {
            leave(-flow.fy[flow.fy_index(i, 0, k)], mesh.index(i, 0, k));
            leave(flow.fy[flow.fy_index(i, ny, k)], mesh.index(i, ny - 1, k));
        }
    }
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double area = mesh.dx()[i] * mesh.dy()[j];
            leave(-flow.fz[flow.fz_index(i, j, 0)] + field.settling_velocity * area, mesh.index(i, j, 0));
            leave(flow.fz[flow.fz_index(i, j, nz)], mesh.index(i, j, nz - 1));
        }
    }
    return out;
}

std::vector<MonitorPoint> default_monitors()
{
    return {{30.0, 2.0}, {100.0, 2.0}, {200.0, 2.0}, {300.0, 2.0}, {400.0, 2.0}, {600.0, 2.0}};
}

Point3 monitor_position(const MonitorPoint& m, const RoadStrip& road) noexcept
{
    return {road.x_max + m.distance_m, road.centre_y(), m.height_m};
}

std::vector<MonitorSample> sample_monitors(const SpeciesField& field, const StructuredMesh& mesh,
                                           const std::vector<MonitorPoint>& monitors)
{
    std::vector<MonitorSample> out;
    out.reserve(monitors.size());
    for (const auto& m : monitors) {
        MonitorSample s;
        s.pollutant = field.pollutant.id;
        s.distance_m = m.distance_m;
        s.height_m = m.height_m;
        s.background = field.background;
        const auto pos = monitor_position(m, mesh.road());
        if (const auto v = mesh.interpolate(field.concentration, pos)) {
            s.raw = *v;
        } else {
            s.error = fmt::format("monitor at ({}, {}, {}) lies outside the domain", pos.x, pos.y, pos.z);
        }
        s.adjusted = s.raw + s.background;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<MonitorSample> add_background(std::vector<MonitorSample> samples, const PerPollutant<double>& background)
{
    for (auto& s : samples) {
        s.background = background[s.pollutant];
        s.adjusted = s.raw + s.background;
    }
    return samples;
}

void write_monitor_csv(const std::vector<MonitorSample>& samples, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("pollutant,distance_m,height_m,raw_kg_m3,background_kg_m3,adjusted_kg_m3\n");
        for (const auto& s : samples) {
            if (s.error) {
                out.print("# {} at {} m: {}\n", pollutant_name(s.pollutant), s.distance_m, *s.error);
                continue;
            }
            out.print("{},{},{},{:.17g},{:.17g},{:.17g}\n", pollutant_name(s.pollutant), s.distance_m, s.height_m, s.raw,
                      s.background, s.adjusted);
        }
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

std::vector<MonitorSample> read_monitor_csv(const std::filesystem::path& path)
{
    const auto table = detail::read_csv(path);
    const auto src = path.string();
    const auto ip = table.column("pollutant", src);
    const auto id = table.column("distance_m", src);
    const auto ih = table.column("height_m", src);
    const auto ir = table.column("raw_kg_m3", src);
    const auto ib = table.column("background_kg_m3", src);
    const auto ia = table.column("adjusted_kg_m3", src);
    std::vector<MonitorSample> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = fmt::format("{}:{}", src, table.line_numbers[r]);
        MonitorSample s;
        s.pollutant = parse_pollutant(row[ip]);
        s.distance_m = detail::parse_double(row[id], where);
        s.height_m = detail::parse_double(row[ih], where);
        s.raw = detail::parse_double(row[ir], where);
        s.background = detail::parse_double(row[ib], where);
        s.adjusted = detail::parse_double(row[ia], where);
        out.push_back(s);
    }
    return out;
}

void write_species_vtk(const StructuredMesh& mesh, const std::vector<SpeciesField>& fields,
                       const std::filesystem::path& path)
{
    std::vector<VtkScalarArray> arrays;
    for (const auto& f : fields) {
        auto name = std::string(pollutant_name(f.pollutant.id));
        std::replace(name.begin(), name.end(), '.', '_');
        arrays.push_back({name + "_kg_m3", f.concentration});
    }
    write_vtk_structured(mesh, path, "roadcap species concentrations", arrays);
}

} // namespace roadcap
