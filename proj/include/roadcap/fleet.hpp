#pragma once

// Tier-2 road traffic emission inventory: vehicle-km activity times per-class
// emission factors, and its conversion to a steady road-surface source.

#include "roadcap/pollutant.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace roadcap {

enum class Fuel {
    petrol,
    diesel,
};

struct VehicleClass {
    std::string name;
    Fuel fuel{Fuel::petrol};
    double stock{0.0};             // vehicles
    double annual_mileage_km{0.0}; // km per vehicle per year
    double type_ratio{0.0};        // share of traffic volume
    double pce{1.0};               // passenger-car equivalent factor
};

struct FleetSpec {
    std::vector<VehicleClass> classes;

    /// Checks per-class ranges and that type ratios sum to one within 1e-9.
    void validate() const;
    [[nodiscard]] const VehicleClass& find(const std::string& name) const;
};

/// g/km per (vehicle class, pollutant).
class EmissionFactorTable {
public:
    void set(const std::string& vehicle_class, PollutantId pollutant, double g_per_km);
    [[nodiscard]] bool contains(const std::string& vehicle_class, PollutantId pollutant) const;
    /// Throws ConfigError naming the pair when absent.
    [[nodiscard]] double factor(const std::string& vehicle_class, PollutantId pollutant) const;
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::pair<std::string, PollutantId>, double> entries_;
};

/// Basic variables of the traffic side: annual volume, mean speed, mean density.
/// Density is carried for completeness; no computation reads it.
struct TrafficState {
    double annual_volume{0.0}; // vehicles per year
    double speed_kmh{90.0};
    double density_veh_per_km{0.0};

    void validate() const;
};

/// Which activity term of the Tier-2 sum a pollutant is routed through. All
/// three reduce to stock x mileage x factor; the distinction is kept so that
/// coupling weights can be attached per route.
enum class EmissionRoute {
    distance_based, // CO, NO2, PM2.5, PM10
    co2,
    so2,
};

[[nodiscard]] EmissionRoute emission_route(PollutantId id) noexcept;

struct EmissionInventory {
    std::vector<std::string> classes;
    std::vector<PerPollutant<double>> per_class; // kg/yr, parallel to classes
    PerPollutant<double> totals;                 // kg/yr
    double transfer_coefficient{1.0};            // applied to every entry
};

/// Axis-aligned road strip at the emission height. A degenerate strip
/// (x_min == x_max and y_min == y_max) is a point source.
struct RoadStrip {
    double x_min{600.0};
    double x_max{625.5};
    double y_min{0.0};
    double y_max{300.0};
    double emission_height{0.3};

    [[nodiscard]] double centre_x() const noexcept { return 0.5 * (x_min + x_max); }
    [[nodiscard]] double centre_y() const noexcept { return 0.5 * (y_min + y_max); }
};

struct SourceSpec {
    PerPollutant<double> rate_kg_per_s;
    RoadStrip geometry;
    double injection_speed{0.3}; // m/s, split along the road and lateral axes
};

[[nodiscard]] EmissionInventory compute_inventory(const FleetSpec& fleet, const EmissionFactorTable& ef,
                                                  const TrafficState& traffic, double transfer_coefficient = 1.0);

[[nodiscard]] SourceSpec inventory_to_source(const EmissionInventory& inventory, double modeled_road_length_m,
                                             double network_length_m, const RoadStrip& geometry = {});

/// Weights of the traffic-to-gas coupling: one control factor per
/// distance-based pollutant plus the CO2 and SO2 weights, and the transfer
/// coefficient applied when building the inventory.
struct CouplingCoefficients {
    PerPollutant<double> mu{1.0}; // entries for CO2/SO2 are ignored
    double alpha{1.0};            // CO2 weight
    double beta{1.0};             // SO2 weight
    double transfer{1.0};

    void validate() const;
};

/// q = sum_i mu_i w_i + alpha w_CO2 + beta w_SO2, summed in pollutant order.
[[nodiscard]] double aggregate_q(const EmissionInventory& inventory, const CouplingCoefficients& coeffs);

[[nodiscard]] FleetSpec read_fleet_csv(const std::filesystem::path& path);
[[nodiscard]] EmissionFactorTable read_ef_csv(const std::filesystem::path& path);
void write_inventory_csv(const EmissionInventory& inventory, const std::filesystem::path& path);

} // namespace roadcap
