// Python bindings for the roadcap core: configuration, emissions, capacity
// arithmetic, calibration and the staged pipeline.

#include "roadcap/calibration.hpp"
#include "roadcap/capacity.hpp"
#include "roadcap/config.hpp"
#include "roadcap/dispersion.hpp"
#include "roadcap/pipeline.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace roadcap;

namespace {

template <typename T>
py::dict per_pollutant_dict(const PerPollutant<T>& values)
{
    py::dict d;
    for (auto id : all_pollutants) {
        d[py::str(std::string(pollutant_name(id)))] = values[id];
    }
    return d;
}

PerPollutant<std::int64_t> totals_from_dict(const py::dict& d)
{
    PerPollutant<std::int64_t> out(0);
    for (auto [k, v] : d) {
        out[parse_pollutant(k.cast<std::string>())] = v.cast<std::int64_t>();
    }
    return out;
}

py::dict capacity_to_dict(const CapacityReport& r)
{
    py::dict out;
    for (auto id : all_pollutants) {
        const auto& e = r.entries[id];
        py::dict row;
        row["status"] = e.value.status == CapacityStatus::finite          ? "finite"
                        : e.value.status == CapacityStatus::not_binding ? "not_binding"
                                                                         : "background_exceeds";
        row["t_max"] = e.value.t_max;
        row["total"] = e.total;
        row["per_class"] = e.per_class;
        row["equivalents"] = e.equivalents;
        out[py::str(std::string(pollutant_name(id)))] = row;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Highway traffic capacity from emission inventory, dispersion and inversion";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    m.attr("seconds_per_year") = seconds_per_year;
    m.def("pollutants", [] {
        std::vector<std::string> names;
        for (auto id : all_pollutants) {
            names.emplace_back(pollutant_name(id));
        }
        return names;
    });

    m.def("to_internal", [](double v, const std::string& unit) { return to_internal(v, parse_concentration_unit(unit)); },
          py::arg("value"), py::arg("unit"), "Concentration in kg/m3.");
    m.def("from_internal",
          [](double v, const std::string& unit) { return from_internal(v, parse_concentration_unit(unit)); },
          py::arg("kg_per_m3"), py::arg("unit"));

    m.def("settling_velocity",
          [](double diameter, double particle_density) {
              Pollutant p{PollutantId::PM10, diameter, true};
              return settling_velocity(p, particle_density, FluidProperties{});
          },
          py::arg("diameter_m"), py::arg("particle_density") = 1000.0,
          "Stokes terminal velocity in default air (m/s).");

    m.def("effective_config", [](const std::filesystem::path& path) { return effective_config_dump(load_config(path)); },
          py::arg("config_path"));

    m.def("mesh_cell_count", [](const std::string& preset) { return build_mesh(mesh_preset(preset)).cell_count(); },
          py::arg("preset"));

    m.def("inventory",
          [](const std::filesystem::path& config_path) {
              const auto cfg = load_config(config_path);
              const auto inv = compute_inventory(read_fleet_csv(cfg.files.fleet), read_ef_csv(cfg.files.emission_factors),
                                                 cfg.traffic, cfg.coupling.transfer);
              const auto src = inventory_to_source(inv, cfg.network.modeled_length_m, cfg.network.network_length_m,
                                                   cfg.mesh.road);
              py::dict out;
              out["kg_per_year"] = per_pollutant_dict(inv.totals);
              out["kg_per_s"] = per_pollutant_dict(src.rate_kg_per_s);
              return out;
          },
          py::arg("config_path"), "Annual totals and modelled-road source rates.");

    m.def("capacity_from_totals",
          [](const py::dict& totals, const std::filesystem::path& fleet_csv) {
              const auto report = report_from_totals(totals_from_dict(totals), read_fleet_csv(fleet_csv));
              py::dict out = capacity_to_dict(report);
              const auto b = binding_constraint(report);
              out["binding"] = b ? py::cast(std::string(pollutant_name(*b))) : py::none();
              return out;
          },
          py::arg("totals"), py::arg("fleet_csv"));

    m.def("bisection_invert",
          [](const std::function<double(double)>& forward, double target, double lo, double hi, double tol) {
              const auto r = bisection_invert(forward, target, lo, hi, tol);
              return py::make_tuple(r.q, r.converged, r.iterations);
          },
          py::arg("forward"), py::arg("target"), py::arg("lo"), py::arg("hi"), py::arg("tolerance"),
          "Returns (q, converged, iterations).");

    m.def("calibrate_files",
          [](const std::filesystem::path& simulated, const std::filesystem::path& field, double background_fraction) {
              auto samples = read_simulated_csv(simulated);
              samples = add_background(std::move(samples), background_policy(default_constraints(), background_fraction));
              const auto r = calibrate(samples, read_field_csv(field));
              py::list rows;
              for (const auto& row : r.rows) {
                  py::dict d;
                  d["pollutant"] = std::string(pollutant_name(row.pollutant));
                  d["distance_m"] = row.distance_m;
                  d["unit"] = std::string(unit_label(row.unit));
                  d["field"] = row.field;
                  d["simulated_adjusted"] = row.simulated_adjusted;
                  d["relative_error"] = row.relative_error;
                  rows.append(d);
              }
              py::dict out;
              out["rows"] = rows;
              out["overall_max_relative_error"] = r.overall_max_relative_error;
              out["within_10_percent"] = r.within_10_percent;
              return out;
          },
          py::arg("simulated_csv"), py::arg("field_csv"), py::arg("background_fraction") = 0.7);

    m.def("run_pipeline",
          [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir, const std::string& last,
             const std::optional<std::string>& preset) {
              auto cfg = load_config(config_path);
              if (preset) {
                  cfg.set_mesh_preset(*preset);
              }
              PipelineResult r;
              {
                  py::gil_scoped_release release;
                  r = run_pipeline(cfg, out_dir, parse_stage(last));
              }
              py::dict out;
              out["exit_code"] = static_cast<int>(r.exit_code);
              out["failed_stage"] = r.failed_stage;
              out["message"] = r.message;
              py::list manifest;
              for (const auto& e : r.manifest) {
                  py::dict d;
                  d["stage"] = e.stage;
                  d["artifact"] = e.artifact;
                  d["sha256"] = e.sha256;
                  manifest.append(d);
              }
              out["manifest"] = manifest;
              if (r.inventory) {
                  out["kg_per_year"] = per_pollutant_dict(r.inventory->totals);
              }
              if (r.capacity) {
                  out["capacity"] = capacity_to_dict(*r.capacity);
              }
              return out;
          },
          py::arg("config_path"), py::arg("out_dir"), py::arg("last") = "calibrate", py::arg("preset") = py::none());
}
