#pragma once

// Inverse problem: monitor concentration ceilings to maximum annual traffic
// volume, split by vehicle class and converted to standard vehicles.

#include "roadcap/dispersion.hpp"
#include "roadcap/fleet.hpp"
#include "roadcap/pollutant.hpp"
#include "roadcap/units.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace roadcap {

/// Ambient ceilings, stored in kg/m3 with the unit each was given in.
struct ConstraintSet {
    PerPollutant<double> ceiling;                // kg/m3
    PerPollutant<ConcentrationUnit> input_unit{ConcentrationUnit::kg_per_m3};
    std::string averaging_period{"24 h"};
    std::string standard{"GB3095-2012 Class I"};

    void validate() const;
    void set(PollutantId id, double value, ConcentrationUnit unit);
};

/// CO 4 mg/m3, CO2 1500 mg/m3, NO2 40 ug/m3, PM2.5 35 ug/m3, PM10 40 ug/m3, SO2 20 ug/m3.
[[nodiscard]] ConstraintSet default_constraints();

/// Background of each species as a fixed fraction of its ceiling.
[[nodiscard]] PerPollutant<double> background_policy(const ConstraintSet& constraints, double fraction = 0.7);

/// c_u = raw concentration at the monitor / reference annual volume
/// (kg/m3 per vehicle/yr). Every pollutant must have a sample at the monitor.
[[nodiscard]] PerPollutant<double> unit_concentration(const std::vector<MonitorSample>& samples,
                                                      const TrafficState& reference, const MonitorPoint& monitor);

enum class CapacityStatus {
    finite,
    not_binding,        // zero unit concentration: traffic never reaches the ceiling
    background_exceeds, // no headroom left: T_max = 0
};

struct CapacityValue {
    CapacityStatus status{CapacityStatus::finite};
    double t_max{0.0}; // vehicles/yr; meaningful unless not_binding
};

/// T_max = (C_r - background) / c_u with the sentinels above.
[[nodiscard]] PerPollutant<CapacityValue> invert_capacity(const PerPollutant<double>& unit_conc,
                                                          const ConstraintSet& constraints,
                                                          const PerPollutant<double>& background);

/// Same inversion from the raw monitor concentrations simulated at the
/// reference volume: T_max = Q_ref (headroom / raw). Algebraically equal to
/// invert_capacity(raw / Q_ref, ...) but rounded once, so a simulation that
/// lands exactly on the net ceiling returns Q_ref exactly.
[[nodiscard]] PerPollutant<CapacityValue> invert_at_reference(const PerPollutant<double>& raw,
                                                              double reference_volume,
                                                              const ConstraintSet& constraints,
                                                              const PerPollutant<double>& background);

/// round(type_ratio x total) per class; the rounding residual goes to the
/// class with the largest ratio (first on ties) so the counts sum to total.
[[nodiscard]] std::vector<std::int64_t> split_by_class(std::int64_t total, const FleetSpec& fleet);

/// Sum of class_count x pce.
[[nodiscard]] double to_standard_vehicles(const std::vector<std::int64_t>& counts, const FleetSpec& fleet);

struct CapacityEntry {
    CapacityValue value;
    std::int64_t total{0}; // rounded T_max
    std::vector<std::int64_t> per_class;
    double equivalents{0.0};
    double unit_concentration{0.0}; // kg/m3 per vehicle/yr
    double ceiling{0.0};            // kg/m3
    double background{0.0};         // kg/m3
};

struct CapacityReport {
    std::vector<std::string> classes;
    std::vector<double> type_ratios;
    PerPollutant<CapacityEntry> entries;
    MonitorPoint monitor;
    double reference_volume{0.0};
};

[[nodiscard]] CapacityReport build_capacity_report(const PerPollutant<double>& unit_conc,
                                                   const ConstraintSet& constraints,
                                                   const PerPollutant<double>& background, const FleetSpec& fleet,
                                                   const MonitorPoint& monitor, double reference_volume);

/// Report straight from monitor samples at the reference traffic, inverted
/// with invert_at_reference. This is the path the pipeline takes.
[[nodiscard]] CapacityReport capacity_from_samples(const std::vector<MonitorSample>& samples,
                                                   const TrafficState& reference, const MonitorPoint& monitor,
                                                   const ConstraintSet& constraints,
                                                   const PerPollutant<double>& background, const FleetSpec& fleet);

/// Report from given totals (used to reproduce published tables).
[[nodiscard]] CapacityReport report_from_totals(const PerPollutant<std::int64_t>& totals, const FleetSpec& fleet);

/// Pollutant with the smallest T_max among non-sentinel entries; ties go to
/// the first in CO, CO2, NO2, SO2, PM2.5, PM10 order. nullopt when every
/// entry is "not binding".
[[nodiscard]] std::optional<PollutantId> binding_constraint(const CapacityReport& report);

struct BisectionResult {
    double q{0.0};
    double value{0.0};
    int iterations{0};
    bool converged{false};
};

/// Finds Q in [lo, hi] with |forward(Q) - target| <= tolerance by bisection,
/// at most 64 halvings. forward must be nondecreasing. Throws
/// ValidationError when target is not bracketed by forward(lo), forward(hi).
[[nodiscard]] BisectionResult bisection_invert(const std::function<double(double)>& forward, double target, double lo,
                                               double hi, double tolerance);

void write_capacity_csv(const CapacityReport& report, const std::filesystem::path& path);
void write_capacity_json(const CapacityReport& report, const std::filesystem::path& path);

} // namespace roadcap
