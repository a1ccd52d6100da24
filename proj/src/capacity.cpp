#include "roadcap/capacity.hpp"

#include "roadcap/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace roadcap {

void ConstraintSet::validate() const
{
    for (auto id : all_pollutants) {
        if (!(ceiling[id] > 0.0)) {
            throw ValidationError(fmt::format("constraint for {} must be > 0", pollutant_name(id)));
        }
    }
}

void ConstraintSet::set(PollutantId id, double value, ConcentrationUnit unit)
{
    ceiling[id] = to_internal(value, unit);
    input_unit[id] = unit;
}

ConstraintSet default_constraints()
{
    ConstraintSet c;
    c.set(PollutantId::CO, 4.0, ConcentrationUnit::mg_per_m3);
    c.set(PollutantId::CO2, 1500.0, ConcentrationUnit::mg_per_m3);
    c.set(PollutantId::NO2, 40.0, ConcentrationUnit::ug_per_m3);
    c.set(PollutantId::PM2_5, 35.0, ConcentrationUnit::ug_per_m3);
    c.set(PollutantId::PM10, 40.0, ConcentrationUnit::ug_per_m3);
    c.set(PollutantId::SO2, 20.0, ConcentrationUnit::ug_per_m3);
    return c;
}

PerPollutant<double> background_policy(const ConstraintSet& constraints, double fraction)
{
    if (!(fraction >= 0.0)) {
        throw ValidationError("background fraction must be >= 0");
    }
    PerPollutant<double> bg;
    for (auto id : all_pollutants) {
        bg[id] = fraction * constraints.ceiling[id];
    }
    return bg;
}

namespace {

PerPollutant<double> raw_at_monitor(const std::vector<MonitorSample>& samples, const MonitorPoint& monitor)
{
    PerPollutant<double> raw;
    PerPollutant<bool> seen{false};
    for (const auto& s : samples) {
        if (s.error || s.distance_m != monitor.distance_m || s.height_m != monitor.height_m) {
            continue;
        }
        raw[s.pollutant] = s.raw;
        seen[s.pollutant] = true;
    }
    for (auto id : all_pollutants) {
        if (!seen[id]) {
            throw ValidationError(fmt::format("no {} sample at the {} m / {} m monitor", pollutant_name(id),
                                              monitor.distance_m, monitor.height_m));
        }
    }
    return raw;
}

template <typename Divide>
PerPollutant<CapacityValue> invert_with(const PerPollutant<double>& denominators, const ConstraintSet& constraints,
                                        const PerPollutant<double>& background, const char* what, Divide divide)
{
    PerPollutant<CapacityValue> out;
    for (auto id : all_pollutants) {
        const double d = denominators[id];
        if (!(d >= 0.0)) {
            throw ValidationError(fmt::format("{} for {} must be >= 0", what, pollutant_name(id)));
        }
        const double headroom = constraints.ceiling[id] - background[id];
        if (headroom <= 0.0) {
            out[id] = {CapacityStatus::background_exceeds, 0.0};
        } else if (d == 0.0) {
            out[id] = {CapacityStatus::not_binding, 0.0};
        } else {
            out[id] = {CapacityStatus::finite, divide(headroom, d)};
        }
    }
    return out;
}

void require_reference(double volume)
{
    if (!(volume > 0.0)) {
        throw ValidationError("reference traffic volume must be > 0");
    }
}

} // namespace

PerPollutant<double> unit_concentration(const std::vector<MonitorSample>& samples, const TrafficState& reference,
                                        const MonitorPoint& monitor)
{
    require_reference(reference.annual_volume);
    auto cu = raw_at_monitor(samples, monitor);
    for (auto& v : cu) {
        v /= reference.annual_volume;
    }
    return cu;
}

PerPollutant<CapacityValue> invert_capacity(const PerPollutant<double>& unit_conc, const ConstraintSet& constraints,
                                            const PerPollutant<double>& background)
{
    return invert_with(unit_conc, constraints, background, "unit concentration",
                       [](double headroom, double cu) { return headroom / cu; });
}

PerPollutant<CapacityValue> invert_at_reference(const PerPollutant<double>& raw, double reference_volume,
                                                const ConstraintSet& constraints,
                                                const PerPollutant<double>& background)
{
    require_reference(reference_volume);
    return invert_with(raw, constraints, background, "raw concentration",
                       [reference_volume](double headroom, double c) { return reference_volume * (headroom / c); });
}

std::vector<std::int64_t> split_by_class(std::int64_t total, const FleetSpec& fleet)
{
    std::vector<std::int64_t> counts;
    counts.reserve(fleet.classes.size());
    std::int64_t sum = 0;
    std::size_t largest = 0;
    for (std::size_t i = 0; i < fleet.classes.size(); ++i) {
        const double ratio = fleet.classes[i].type_ratio;
        counts.push_back(std::llround(ratio * static_cast<double>(total)));
        sum += counts.back();
        if (ratio > fleet.classes[largest].type_ratio) {
            largest = i;
        }
    }
    if (!counts.empty()) {
        counts[largest] += total - sum;
    }
    return counts;
}

double to_standard_vehicles(const std::vector<std::int64_t>& counts, const FleetSpec& fleet)
{
    if (counts.size() != fleet.classes.size()) {
        throw ValidationError("class count vector does not match the fleet");
    }
    double eq = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        eq += static_cast<double>(counts[i]) * fleet.classes[i].pce;
    }
    return eq;
}

namespace {

CapacityReport empty_report(const FleetSpec& fleet)
{
    CapacityReport r;
    for (const auto& c : fleet.classes) {
        r.classes.push_back(c.name);
        r.type_ratios.push_back(c.type_ratio);
    }
    return r;
}

void fill_split(CapacityEntry& e, const FleetSpec& fleet)
{
    e.total = e.value.status == CapacityStatus::not_binding ? 0 : std::llround(e.value.t_max);
    e.per_class = split_by_class(e.total, fleet);
    e.equivalents = to_standard_vehicles(e.per_class, fleet);
}

} // namespace

namespace {

CapacityReport assemble(const PerPollutant<CapacityValue>& values, const PerPollutant<double>& unit_conc,
                        const ConstraintSet& constraints, const PerPollutant<double>& background,
                        const FleetSpec& fleet, const MonitorPoint& monitor, double reference_volume)
{
    auto r = empty_report(fleet);
    r.monitor = monitor;
    r.reference_volume = reference_volume;
    for (auto id : all_pollutants) {
        auto& e = r.entries[id];
        e.value = values[id];
        e.unit_concentration = unit_conc[id];
        e.ceiling = constraints.ceiling[id];
        e.background = background[id];
        fill_split(e, fleet);
    }
    return r;
}

} // namespace

CapacityReport build_capacity_report(const PerPollutant<double>& unit_conc, const ConstraintSet& constraints,
                                     const PerPollutant<double>& background, const FleetSpec& fleet,
                                     const MonitorPoint& monitor, double reference_volume)
{
    return assemble(invert_capacity(unit_conc, constraints, background), unit_conc, constraints, background, fleet,
                    monitor, reference_volume);
}

CapacityReport capacity_from_samples(const std::vector<MonitorSample>& samples, const TrafficState& reference,
                                     const MonitorPoint& monitor, const ConstraintSet& constraints,
                                     const PerPollutant<double>& background, const FleetSpec& fleet)
{
    const auto cu = unit_concentration(samples, reference, monitor);
    const auto values = invert_at_reference(raw_at_monitor(samples, monitor), reference.annual_volume, constraints,
                                            background);
    return assemble(values, cu, constraints, background, fleet, monitor, reference.annual_volume);
}

CapacityReport report_from_totals(const PerPollutant<std::int64_t>& totals, const FleetSpec& fleet)
{
    auto r = empty_report(fleet);
    for (auto id : all_pollutants) {
        auto& e = r.entries[id];
        e.value = {CapacityStatus::finite, static_cast<double>(totals[id])};
        fill_split(e, fleet);
    }
    return r;
}

std::optional<PollutantId> binding_constraint(const CapacityReport& report)
{
    std::optional<PollutantId> best;
    for (auto id : all_pollutants) {
        const auto& v = report.entries[id].value;
        if (v.status == CapacityStatus::not_binding) {
            continue;
        }
        if (!best || v.t_max < report.entries[*best].value.t_max) {
            best = id;
        }
    }
    return best;
}

BisectionResult bisection_invert(const std::function<double(double)>& forward, double target, double lo, double hi,
                                 double tolerance)
{
    if (!(lo <= hi)) {
        throw ValidationError("bisection bounds must satisfy lo <= hi");
    }
    const double flo = forward(lo);
    const double fhi = forward(hi);
    if (!(flo <= target && target <= fhi)) {
        throw ValidationError(fmt::format("bisection bracket does not contain the target {}: f({}) = {}, f({}) = {}",
                                          target, lo, flo, hi, fhi));
    }
    BisectionResult r;
    if (std::abs(flo - target) <= tolerance) {
        return {lo, flo, 0, true};
    }
    if (std::abs(fhi - target) <= tolerance) {
        return {hi, fhi, 0, true};
    }
    double a = lo, b = hi;
    for (int it = 1; it <= 64; ++it) {
        const double mid = 0.5 * (a + b);
        const double f = forward(mid);
        r = {mid, f, it, std::abs(f - target) <= tolerance};
        if (r.converged) {
            break;
        }
        (f < target ? a : b) = mid;
    }
    return r;
}

namespace {

// Column order of the published capacity table.
constexpr std::array<PollutantId, pollutant_count> table_order{
    PollutantId::PM2_5, PollutantId::PM10, PollutantId::CO, PollutantId::CO2, PollutantId::NO2, PollutantId::SO2,
};

std::string status_name(CapacityStatus s)
{
    switch (s) {
    case CapacityStatus::finite: return "finite";
    case CapacityStatus::not_binding: return "not_binding";
    case CapacityStatus::background_exceeds: return "background_exceeds";
    }
    return "finite";
}

} // namespace

void write_capacity_csv(const CapacityReport& report, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("vehicle_type,type_ratio");
        for (auto id : table_order) {
            out.print(",{}", pollutant_name(id));
        }
        out.print("\n");
        for (std::size_t i = 0; i < report.classes.size(); ++i) {
            out.print("{},{:.6g}", report.classes[i], report.type_ratios[i]);
            for (auto id : table_order) {
                const auto& e = report.entries[id];
                if (e.value.status == CapacityStatus::not_binding) {
                    out.print(",not_binding");
                } else {
                    out.print(",{}", e.per_class[i]);
                }
            }
            out.print("\n");
        }
        out.print("total_per_year,");
        for (auto id : table_order) {
            const auto& e = report.entries[id];
            out.print(",{}", e.value.status == CapacityStatus::not_binding ? std::string("not_binding")
                                                                           : std::to_string(e.total));
        }
        out.print("\nstandard_vehicle_equivalents,");
        for (auto id : table_order) {
            const auto& e = report.entries[id];
            out.print(",{}", e.value.status == CapacityStatus::not_binding ? std::string("not_binding")
                                                                           : fmt::format("{:.17g}", e.equivalents));
        }
        out.print("\n");
        const auto binding = binding_constraint(report);
        out.print("# binding constraint: {}\n", binding ? std::string(pollutant_name(*binding)) : std::string("none"));
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

void write_capacity_json(const CapacityReport& report, const std::filesystem::path& path)
{
    nlohmann::ordered_json j;
    j["monitor"] = {{"distance_m", report.monitor.distance_m}, {"height_m", report.monitor.height_m}};
    j["reference_volume_veh_per_year"] = report.reference_volume;
    j["classes"] = report.classes;
    j["type_ratios"] = report.type_ratios;
    auto& entries = j["pollutants"];
    for (auto id : all_pollutants) {
        const auto& e = report.entries[id];
        nlohmann::ordered_json x;
        x["pollutant"] = pollutant_name(id);
        x["status"] = status_name(e.value.status);
        if (e.value.status == CapacityStatus::not_binding) {
            x["t_max_veh_per_year"] = nullptr;
        } else {
            x["t_max_veh_per_year"] = e.value.t_max;
        }
        x["total"] = e.total;
        x["per_class"] = e.per_class;
        x["standard_vehicle_equivalents"] = e.equivalents;
        x["unit_concentration_kg_m3_per_veh_year"] = e.unit_concentration;
        x["ceiling_kg_m3"] = e.ceiling;
        x["background_kg_m3"] = e.background;
        entries.push_back(std::move(x));
    }
    const auto binding = binding_constraint(report);
    j["binding"] = binding ? nlohmann::ordered_json(std::string(pollutant_name(*binding))) : nlohmann::ordered_json(nullptr);
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

} // namespace roadcap
