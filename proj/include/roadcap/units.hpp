#pragma once

#include <string_view>

namespace roadcap {

inline constexpr double seconds_per_year = 31'536'000.0;
inline constexpr double grams_per_kilogram = 1000.0;

/// Concentration units accepted on input and output. Internal unit is kg/m3.
enum class ConcentrationUnit {
    kg_per_m3,
    mg_per_m3,
    ug_per_m3,
};

[[nodiscard]] constexpr double to_kg_per_m3_factor(ConcentrationUnit unit) noexcept
{
    switch (unit) {
    case ConcentrationUnit::kg_per_m3: return 1.0;
    case ConcentrationUnit::mg_per_m3: return 1e-6;
    case ConcentrationUnit::ug_per_m3: return 1e-9;
    }
    return 1.0;
}

[[nodiscard]] constexpr double to_internal(double value, ConcentrationUnit unit) noexcept
{
    return value * to_kg_per_m3_factor(unit);
}

[[nodiscard]] constexpr double from_internal(double kg_per_m3, ConcentrationUnit unit) noexcept
{
    return kg_per_m3 / to_kg_per_m3_factor(unit);
}

/// Accepts "kg/m3", "mg/m3", "ug/m3" and the superscript / micro-sign spellings.
/// Throws ValidationError for anything else.
[[nodiscard]] ConcentrationUnit parse_concentration_unit(std::string_view text);
[[nodiscard]] std::string_view unit_label(ConcentrationUnit unit) noexcept;

} // namespace roadcap
