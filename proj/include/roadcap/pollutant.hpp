#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace roadcap {

/// Fixed ordering used for tie breaks, CSV rows and array indexing.
enum class PollutantId : std::size_t {
    CO = 0,
    CO2,
    NO2,
    SO2,
    PM2_5,
    PM10,
};

inline constexpr std::size_t pollutant_count = 6;

inline constexpr std::array<PollutantId, pollutant_count> all_pollutants{
    PollutantId::CO, PollutantId::CO2, PollutantId::NO2,
    PollutantId::SO2, PollutantId::PM2_5, PollutantId::PM10,
};

/// One value per pollutant, indexed by PollutantId.
template <typename T>
class PerPollutant {
public:
    constexpr PerPollutant() = default;
    constexpr explicit PerPollutant(T fill) { values_.fill(fill); }

    constexpr T& operator[](PollutantId id) noexcept { return values_[static_cast<std::size_t>(id)]; }
    constexpr const T& operator[](PollutantId id) const noexcept { return values_[static_cast<std::size_t>(id)]; }

    constexpr auto begin() noexcept { return values_.begin(); }
    constexpr auto end() noexcept { return values_.end(); }
    constexpr auto begin() const noexcept { return values_.begin(); }
    constexpr auto end() const noexcept { return values_.end(); }

    friend constexpr bool operator==(const PerPollutant&, const PerPollutant&) = default;

private:
    std::array<T, pollutant_count> values_{};
};

struct Pollutant {
    PollutantId id{PollutantId::CO};
    double particle_diameter{0.0}; // m
    bool is_particulate{false};
};

/// Default particle diameters: CO 3.76e-10, CO2 3.3e-10, NO2 1.0e-9, SO2 2.46e-10,
/// PM2.5 2.5e-6 and PM10 1.0e-6 m. The PM10 value is smaller than PM2.5's on
/// purpose (it follows the source data); override it through the config if a
/// conventional 1.0e-5 m is wanted.
[[nodiscard]] Pollutant default_pollutant(PollutantId id) noexcept;

[[nodiscard]] std::string_view pollutant_name(PollutantId id) noexcept;

/// Parses "CO", "CO2", "NO2", "SO2", "PM2.5"/"PM2_5", "PM10" (case-insensitive).
/// Throws ValidationError on unknown names.
[[nodiscard]] PollutantId parse_pollutant(std::string_view name);

} // namespace roadcap
