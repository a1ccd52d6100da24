#include "roadcap/independence.hpp"

#include "roadcap/dispersion.hpp"
#include "roadcap/errors.hpp"
#include "roadcap/flow.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace roadcap {

std::vector<Point3> SampleLine::positions() const
{
    if (points < 2) {
        throw ValidationError("sample line needs at least 2 points");
    }
    std::vector<Point3> out;
    out.reserve(points);
    const double n = static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / n;
        out.push_back({start.x + t * (end.x - start.x), start.y + t * (end.y - start.y),
                       start.z + t * (end.z - start.z)});
    }
    return out;
}

SampleLine default_sample_line(const RoadStrip& road)
{
    const double x = road.centre_x();
    return {{x, 130.0, 2.0}, {x, 170.0, 2.0}, 41};
}

std::vector<double> sample_line(const StructuredMesh& mesh, const std::vector<double>& field, const SampleLine& line)
{
    std::vector<double> out;
    for (const auto& p : line.positions()) {
        const auto v = mesh.interpolate(field, p);
        if (!v) {
            throw ValidationError(fmt::format("sample point ({}, {}, {}) lies outside the mesh", p.x, p.y, p.z));
        }
        out.push_back(*v);
    }
    return out;
}

double max_relative_deviation(const std::vector<double>& a, const std::vector<double>& b, double floor)
{
    if (a.size() != b.size()) {
        throw ValidationError(fmt::format("sample counts differ ({} vs {})", a.size(), b.size()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ref = std::max(std::abs(b[i]), floor);
        worst = std::max(worst, std::abs(a[i] - b[i]) / ref);
    }
    return worst;
}

PairReport compare_levels(const LevelReport& coarse, const LevelReport& fine, double threshold)
{
    PairReport p;
    if (!coarse.ok || !fine.ok) {
        return p;
    }
    p.evaluated = true;
    p.speed_deviation = max_relative_deviation(coarse.speed, fine.speed);
    p.concentration_deviation = max_relative_deviation(coarse.concentration, fine.concentration);
    p.pass = p.speed_deviation < threshold && p.concentration_deviation < threshold;
    return p;
}

IndependenceReport independence_study(const std::vector<MeshSpec>& levels, const LevelSolver& solve,
                                      const SampleLine& line, double threshold)
{
    if (levels.size() < 2) {
        throw ValidationError("an independence study needs at least two levels");
    }
    IndependenceReport report;
    report.line = line.positions();
    report.threshold = threshold;
    for (const auto& spec : levels) {
        LevelReport lr;
        lr.name = spec.name;
        try {
            auto fields = solve(spec);
            lr.cells = fields.mesh.cell_count();
            lr.converged = fields.converged;
            lr.iterations = fields.iterations;
            lr.speed = sample_line(fields.mesh, fields.speed, line);
            lr.concentration = sample_line(fields.mesh, fields.concentration, line);
            lr.ok = true;
        } catch (const std::exception& e) {
            lr.error = e.what();
        }
        report.levels.push_back(std::move(lr));
    }
    report.pass = true;
    for (std::size_t i = 0; i + 1 < report.levels.size(); ++i) {
        auto p = compare_levels(report.levels[i], report.levels[i + 1], threshold);
        p.coarse = i;
        p.fine = i + 1;
        report.pass = report.pass && p.evaluated && p.pass;
        report.pairs.push_back(p);
    }
    return report;
}

std::vector<MeshSpec> level_specs(const RunConfig& cfg, const std::vector<std::string>& presets)
{
    std::vector<MeshSpec> out;
    for (const auto& name : presets) {
        RunConfig c = cfg;
        c.set_mesh_preset(name);
        out.push_back(c.mesh);
    }
    return out;
}

LevelSolver scenario_solver(const RunConfig& cfg, PollutantId species)
{
    return [cfg, species](const MeshSpec& spec) {
        const auto fleet = read_fleet_csv(cfg.files.fleet);
        const auto ef = read_ef_csv(cfg.files.emission_factors);
        const auto inventory = compute_inventory(fleet, ef, cfg.traffic, cfg.coupling.transfer);
        const auto source =
            inventory_to_source(inventory, cfg.network.modeled_length_m, cfg.network.network_length_m, spec.road);
        auto mesh = build_mesh(spec);
        const auto flow = solve_flow(mesh, cfg.fluid, cfg.boundaries, cfg.turbulence, cfg.solver);
        if (!flow.converged) {
            throw ConvergenceError(fmt::format("level '{}' did not converge in {} iterations", spec.name,
                                               flow.iterations));
        }
        auto field = solve_scalar(flow, mesh, source, cfg.pollutants[species], cfg.fluid, cfg.dispersion);
        LevelFields out{std::move(mesh), flow.speed(), std::move(field.concentration), field.converged,
                        flow.iterations};
        return out;
    };
}

void write_independence_csv(const IndependenceReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << "level,x,y,z,speed_m_s,concentration_kg_m3\n";
    for (const auto& lv : report.levels) {
        if (!lv.ok) {
            continue;
        }
        for (std::size_t i = 0; i < report.line.size(); ++i) {
            const auto& p = report.line[i];
            out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", lv.name, p.x, p.y, p.z, lv.speed[i],
                               lv.concentration[i]);
        }
    }
}

void write_independence_json(const IndependenceReport& report, const std::filesystem::path& path)
{
    nlohmann::ordered_json j;
    j["threshold"] = report.threshold;
    j["pass"] = report.pass;
    j["levels"] = nlohmann::ordered_json::array();
    for (const auto& lv : report.levels) {
        nlohmann::ordered_json e{{"name", lv.name},   {"cells", lv.cells},           {"ok", lv.ok},
                                 {"converged", lv.converged}, {"iterations", lv.iterations}};
        if (!lv.error.empty()) {
            e["error"] = lv.error;
        }
        j["levels"].push_back(e);
    }
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : report.pairs) {
        j["pairs"].push_back({{"coarse", report.levels[p.coarse].name},
                              {"fine", report.levels[p.fine].name},
                              {"evaluated", p.evaluated},
                              {"speed_max_rel_deviation", p.speed_deviation},
                              {"concentration_max_rel_deviation", p.concentration_deviation},
                              {"pass", p.pass}});
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

} // namespace roadcap
