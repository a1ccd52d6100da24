#include "roadcap/calibration.hpp"

#include "csv.hpp"
#include "roadcap/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>

namespace roadcap {

std::vector<FieldMeasurement> read_field_csv(const std::filesystem::path& path)
{
    const auto table = detail::read_csv(path);
    const auto src = path.string();
    const auto ip = table.column("pollutant", src);
    const auto id = table.column("distance_m", src);
    const auto iv = table.column("field_value", src);
    const auto iu = table.column("unit", src);
    std::vector<FieldMeasurement> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = fmt::format("{}:{}", src, table.line_numbers[r]);
        if (row[iu].empty()) {
            throw ValidationError(where + ": missing unit tag");
        }
        out.push_back({parse_pollutant(row[ip]), detail::parse_double(row[id], where),
                       detail::parse_double(row[iv], where), parse_concentration_unit(row[iu])});
    }
    return out;
}

std::vector<MonitorSample> read_simulated_csv(const std::filesystem::path& path, double height_m)
{
    const auto table = detail::read_csv(path);
    const auto src = path.string();
    const auto ip = table.column("pollutant", src);
    const auto id = table.column("distance_m", src);
    const auto iv = table.column("sim_value", src);
    const auto iu = table.column("unit", src);
    std::vector<MonitorSample> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = fmt::format("{}:{}", src, table.line_numbers[r]);
        if (row[iu].empty()) {
            throw ValidationError(where + ": missing unit tag");
        }
        MonitorSample s;
        s.pollutant = parse_pollutant(row[ip]);
        s.distance_m = detail::parse_double(row[id], where);
        s.height_m = height_m;
        s.raw = to_internal(detail::parse_double(row[iv], where), parse_concentration_unit(row[iu]));
        s.adjusted = s.raw;
        out.push_back(s);
    }
    return out;
}

CalibrationReport calibrate(const std::vector<MonitorSample>& samples, const std::vector<FieldMeasurement>& field,
                            double threshold)
{
    CalibrationReport report;
    report.threshold = threshold;
    for (const auto& f : field) {
        CalibrationRow row;
        row.pollutant = f.pollutant;
        row.distance_m = f.distance_m;
        row.unit = f.unit;
        row.field = f.value;
        const auto it = std::find_if(samples.begin(), samples.end(), [&](const MonitorSample& s) {
            return s.pollutant == f.pollutant && s.distance_m == f.distance_m && !s.error;
        });
        if (it == samples.end()) {
            row.error = fmt::format("no simulated {} sample at {} m", pollutant_name(f.pollutant), f.distance_m);
            report.rows.push_back(std::move(row));
            continue;
        }
        row.simulated_raw = from_internal(it->raw, f.unit);
        row.simulated_adjusted = from_internal(it->adjusted, f.unit);
        row.absolute_error = std::abs(row.simulated_adjusted - row.field);
        row.degenerate = std::abs(row.field) < relative_error_floor;
        row.relative_error = row.absolute_error / std::max(std::abs(row.field), relative_error_floor);

        auto& m = report.max_relative_error[f.pollutant];
        m = std::max(m.value_or(0.0), row.relative_error);
        report.overall_max_relative_error = std::max(report.overall_max_relative_error, row.relative_error);
        report.rows.push_back(std::move(row));
    }
    report.within_10_percent = report.overall_max_relative_error <= threshold;
    return report;
}

void write_calibration_csv(const CalibrationReport& report, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("pollutant,distance_m,unit,field,simulated_raw,simulated_adjusted,absolute_error,relative_error,"
                  "degenerate,error\n");
        for (const auto& r : report.rows) {
            out.print("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", pollutant_name(r.pollutant),
                      r.distance_m, unit_label(r.unit), r.field, r.simulated_raw, r.simulated_adjusted,
                      r.absolute_error, r.relative_error, r.degenerate ? 1 : 0, r.error.value_or(""));
        }
        out.print("# overall_max_relative_error,{:.17g}\n", report.overall_max_relative_error);
        out.print("# within_{}_percent,{}\n", std::lround(report.threshold * 100.0),
                  report.within_10_percent ? "true" : "false");
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

std::string format_calibration_table(const CalibrationReport& report)
{
    std::string s = fmt::format("{:<7} {:>8} {:>7} {:>14} {:>14} {:>14} {:>12}\n", "species", "dist_m", "unit", "field",
                                "sim+bg", "abs_err", "rel_err");
    for (const auto& r : report.rows) {
        if (r.error) {
            s += fmt::format("{:<7} {:>8} {}\n", pollutant_name(r.pollutant), r.distance_m, *r.error);
            continue;
        }
        s += fmt::format("{:<7} {:>8} {:>7} {:>14.6g} {:>14.6g} {:>14.6g} {:>11.2f}%{}\n", pollutant_name(r.pollutant),
                         r.distance_m, unit_label(r.unit), r.field, r.simulated_adjusted, r.absolute_error,
                         100.0 * r.relative_error, r.degenerate ? " (degenerate)" : "");
    }
    for (auto id : all_pollutants) {
        if (const auto& m = report.max_relative_error[id]) {
            s += fmt::format("max relative error {:<6} {:.2f}%\n", pollutant_name(id), 100.0 * *m);
        }
    }
    s += fmt::format("overall max relative error {:.2f}% -> {} the {:.0f}% band\n",
                     100.0 * report.overall_max_relative_error, report.within_10_percent ? "within" : "outside",
                     100.0 * report.threshold);
    return s;
}

} // namespace roadcap
