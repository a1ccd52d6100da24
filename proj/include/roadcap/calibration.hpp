#pragma once

// Comparison of background-adjusted simulated monitor values with field
// measurements.

#include "roadcap/dispersion.hpp"
#include "roadcap/units.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace roadcap {

struct FieldMeasurement {
    PollutantId pollutant{PollutantId::CO};
    double distance_m{0.0};
    double value{0.0}; // in `unit`
    ConcentrationUnit unit{ConcentrationUnit::kg_per_m3};
};

/// Schema `pollutant,distance_m,field_value,unit`; the unit tag is mandatory.
[[nodiscard]] std::vector<FieldMeasurement> read_field_csv(const std::filesystem::path& path);

/// Schema `pollutant,distance_m,sim_value,unit`: raw simulated values
/// without background, as published alongside field data. Heights default
/// to `height_m`.
[[nodiscard]] std::vector<MonitorSample> read_simulated_csv(const std::filesystem::path& path, double height_m = 2.0);

inline constexpr double relative_error_floor = 1e-12;

struct CalibrationRow {
    PollutantId pollutant{PollutantId::CO};
    double distance_m{0.0};
    ConcentrationUnit unit{ConcentrationUnit::kg_per_m3}; // of every value below
    double field{0.0};
    double simulated_raw{0.0};
    double simulated_adjusted{0.0};
    double absolute_error{0.0};
    double relative_error{0.0};
    bool degenerate{false}; // |field| below the division floor
    std::optional<std::string> error;
};

struct CalibrationReport {
    std::vector<CalibrationRow> rows;
    PerPollutant<std::optional<double>> max_relative_error;
    double overall_max_relative_error{0.0};
    bool within_10_percent{true};
    double threshold{0.10};
};

/// Matches samples to field rows by (pollutant, distance). Errors are
/// evaluated in the field row's unit: abs = |adjusted - field|,
/// rel = abs / max(|field|, 1e-12). Field rows without a simulated match
/// become error rows and are left out of the maxima.
[[nodiscard]] CalibrationReport calibrate(const std::vector<MonitorSample>& samples,
                                          const std::vector<FieldMeasurement>& field, double threshold = 0.10);

void write_calibration_csv(const CalibrationReport& report, const std::filesystem::path& path);
[[nodiscard]] std::string format_calibration_table(const CalibrationReport& report);

} // namespace roadcap
