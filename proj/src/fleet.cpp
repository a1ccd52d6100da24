#include "roadcap/fleet.hpp"

#include "csv.hpp"
#include "roadcap/errors.hpp"
#include "roadcap/units.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>

namespace roadcap {

void FleetSpec::validate() const
{
    if (classes.empty()) {
        throw ValidationError("fleet has no vehicle classes");
    }
    double ratio_sum = 0.0;
    for (const auto& c : classes) {
        if (!(c.stock >= 0.0)) {
            throw ValidationError(fmt::format("class '{}': stock must be >= 0 (got {})", c.name, c.stock));
        }
        if (!(c.annual_mileage_km > 0.0)) {
            throw ValidationError(fmt::format("class '{}': annual mileage must be > 0 (got {})", c.name, c.annual_mileage_km));
        }
        if (!(c.type_ratio >= 0.0 && c.type_ratio <= 1.0)) {
            throw ValidationError(fmt::format("class '{}': type ratio must lie in [0, 1] (got {})", c.name, c.type_ratio));
        }
        if (!(c.pce >= 1.0)) {
            throw ValidationError(fmt::format("class '{}': pce must be >= 1 (got {})", c.name, c.pce));
        }
        ratio_sum += c.type_ratio;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw ValidationError(fmt::format("type ratios sum to {:.12g}, expected 1", ratio_sum));
    }
}

const VehicleClass& FleetSpec::find(const std::string& name) const
{
    for (const auto& c : classes) {
        if (c.name == name) {
            return c;
        }
    }
    throw ConfigError("unknown vehicle class '" + name + "'");
}

void EmissionFactorTable::set(const std::string& vehicle_class, PollutantId pollutant, double g_per_km)
{
    if (!(g_per_km >= 0.0)) {
        throw ValidationError(fmt::format("emission factor ({}, {}) must be >= 0", vehicle_class, pollutant_name(pollutant)));
    }
    const auto [it, inserted] = entries_.emplace(std::make_pair(vehicle_class, pollutant), g_per_km);
    if (!inserted) {
        throw ConfigError(fmt::format("duplicate emission factor for ({}, {})", vehicle_class, pollutant_name(pollutant)));
    }
}

bool EmissionFactorTable::contains(const std::string& vehicle_class, PollutantId pollutant) const
{
    return entries_.count({vehicle_class, pollutant}) > 0;
}

double EmissionFactorTable::factor(const std::string& vehicle_class, PollutantId pollutant) const
{
    const auto it = entries_.find({vehicle_class, pollutant});
    if (it == entries_.end()) {
        throw ConfigError(fmt::format("missing emission factor for ({}, {})", vehicle_class, pollutant_name(pollutant)));
    }
    return it->second;
}

void TrafficState::validate() const
{
    if (!(annual_volume >= 0.0)) {
        throw ValidationError("traffic volume must be >= 0");
    }
    if (!(speed_kmh > 0.0)) {
        throw ValidationError("traffic speed must be > 0");
    }
}

EmissionRoute emission_route(PollutantId id) noexcept
{
    switch (id) {
    case PollutantId::CO2: return EmissionRoute::co2;
    case PollutantId::SO2: return EmissionRoute::so2;
    default: return EmissionRoute::distance_based;
    }
}

namespace {

// Each selector picks exactly one of the three activity terms.
double route_selector(EmissionRoute route, EmissionRoute term) noexcept
{
    return route == term ? 1.0 : 0.0;
}

} // namespace

EmissionInventory compute_inventory(const FleetSpec& fleet, const EmissionFactorTable& ef, const TrafficState& traffic,
                                    double transfer_coefficient)
{
    if (fleet.classes.empty()) {
        throw ValidationError("fleet has no vehicle classes");
    }
    traffic.validate();
    for (const auto& c : fleet.classes) {
        if (!(c.stock >= 0.0) || !(c.annual_mileage_km > 0.0)) {
            throw ValidationError(fmt::format("class '{}': stock must be >= 0 and mileage > 0", c.name));
        }
    }
    if (!std::isfinite(transfer_coefficient) || transfer_coefficient < 0.0) {
        throw ValidationError("transfer coefficient must be finite and >= 0");
    }

    EmissionInventory inv;
    inv.transfer_coefficient = transfer_coefficient;
    for (const auto& c : fleet.classes) {
        PerPollutant<double> row;
        const double activity_km = c.stock * c.annual_mileage_km;
        for (auto p : all_pollutants) {
            const auto route = emission_route(p);
            const double factor = ef.factor(c.name, p);
            const double g_per_year = activity_km * (route_selector(route, EmissionRoute::distance_based) * factor +
                                                     route_selector(route, EmissionRoute::co2) * factor +
                                                     route_selector(route, EmissionRoute::so2) * factor);
            row[p] = transfer_coefficient * g_per_year / grams_per_kilogram;
        }
        inv.classes.push_back(c.name);
        inv.per_class.push_back(row);
    }
    for (auto p : all_pollutants) {
        double sum = 0.0;
        for (const auto& row : inv.per_class) {
            sum += row[p];
        }
        inv.totals[p] = sum;
    }
    return inv;
}

SourceSpec inventory_to_source(const EmissionInventory& inventory, double modeled_road_length_m, double network_length_m,
                               const RoadStrip& geometry)
{
    if (!(network_length_m > 0.0)) {
        throw ValidationError("network length must be > 0");
    }
    if (!(modeled_road_length_m > 0.0)) {
        throw ValidationError("modeled road length must be > 0");
    }
    if (network_length_m < modeled_road_length_m) {
        throw ValidationError("network length must be >= modeled road length");
    }
    SourceSpec source;
    source.geometry = geometry;
    const double share = modeled_road_length_m / network_length_m;
    for (auto p : all_pollutants) {
        source.rate_kg_per_s[p] = inventory.totals[p] * share / seconds_per_year;
    }
    return source;
}

void CouplingCoefficients::validate() const
{
    for (double m : mu) {
        if (!std::isfinite(m)) {
            throw ValidationError("coupling weights must be finite");
        }
    }
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(transfer)) {
        throw ValidationError("coupling weights must be finite");
    }
}

double aggregate_q(const EmissionInventory& inventory, const CouplingCoefficients& coeffs)
{
    coeffs.validate();
    double q = 0.0;
    for (auto p : all_pollutants) {
        if (emission_route(p) == EmissionRoute::distance_based) {
            q += coeffs.mu[p] * inventory.totals[p];
        }
    }
    q += coeffs.alpha * inventory.totals[PollutantId::CO2];
    q += coeffs.beta * inventory.totals[PollutantId::SO2];
    return q;
}

FleetSpec read_fleet_csv(const std::filesystem::path& path)
{
    const auto table = detail::read_csv(path);
    const auto src = path.string();
    const auto c_class = table.column("class", src);
    const auto c_fuel = table.column("fuel", src);
    const auto c_stock = table.column("stock", src);
    const auto c_mileage = table.column("annual_mileage_km", src);
    const auto c_ratio = table.column("type_ratio", src);
    const auto c_pce = table.column("pce", src);

    FleetSpec fleet;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = src + ":" + std::to_string(table.line_numbers[r]);
        VehicleClass vc;
        vc.name = row[c_class];
        if (row[c_fuel] == "petrol") {
            vc.fuel = Fuel::petrol;
        } else if (row[c_fuel] == "diesel") {
            vc.fuel = Fuel::diesel;
        } else {
            throw ValidationError(where + ": fuel must be 'petrol' or 'diesel'");
        }
        vc.stock = detail::parse_double(row[c_stock], where);
        vc.annual_mileage_km = detail::parse_double(row[c_mileage], where);
        vc.type_ratio = detail::parse_double(row[c_ratio], where);
        vc.pce = detail::parse_double(row[c_pce], where);
        fleet.classes.push_back(std::move(vc));
    }
    fleet.validate();
    return fleet;
}

EmissionFactorTable read_ef_csv(const std::filesystem::path& path)
{
    const auto table = detail::read_csv(path);
    const auto src = path.string();
    const auto c_class = table.column("class", src);
    const auto c_pollutant = table.column("pollutant", src);
    const auto c_ef = table.column("ef_g_per_km", src);
    EmissionFactorTable ef;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = src + ":" + std::to_string(table.line_numbers[r]);
        ef.set(row[c_class], parse_pollutant(row[c_pollutant]), detail::parse_double(row[c_ef], where));
    }
    return ef;
}

void write_inventory_csv(const EmissionInventory& inventory, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("class,pollutant,kg_per_year\n");
        for (std::size_t c = 0; c < inventory.classes.size(); ++c) {
            for (auto p : all_pollutants) {
                out.print("{},{},{:.17g}\n", inventory.classes[c], pollutant_name(p), inventory.per_class[c][p]);
            }
        }
        out.print("# totals\n");
        for (auto p : all_pollutants) {
            out.print("TOTAL,{},{:.17g}\n", pollutant_name(p), inventory.totals[p]);
        }
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

} // namespace roadcap
