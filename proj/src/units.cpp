#include "roadcap/units.hpp"

#include "roadcap/errors.hpp"

#include <string>

namespace roadcap {

ConcentrationUnit parse_concentration_unit(std::string_view text)
{
    std::string t;
    for (char c : text) {
        if (c != ' ') {
            t.push_back(c);
        }
    }
    if (t == "kg/m3" || t == "kg/m\xC2\xB3") {
        return ConcentrationUnit::kg_per_m3;
    }
    if (t == "mg/m3" || t == "mg/m\xC2\xB3") {
        return ConcentrationUnit::mg_per_m3;
    }
    if (t == "ug/m3" || t == "ug/m\xC2\xB3" || t == "\xC2\xB5g/m3" || t == "\xC2\xB5g/m\xC2\xB3" ||
        t == "\xCE\xBCg/m3" || t == "\xCE\xBCg/m\xC2\xB3") {
        return ConcentrationUnit::ug_per_m3;
    }
    throw ValidationError("unsupported concentration unit '" + std::string(text) + "' (expected kg/m3, mg/m3 or ug/m3)");
}

std::string_view unit_label(ConcentrationUnit unit) noexcept
{
    switch (unit) {
    case ConcentrationUnit::kg_per_m3: return "kg/m3";
    case ConcentrationUnit::mg_per_m3: return "mg/m3";
    case ConcentrationUnit::ug_per_m3: return "ug/m3";
    }
    return "kg/m3";
}

} // namespace roadcap
