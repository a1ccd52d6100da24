#include "roadcap/pollutant.hpp"

#include "roadcap/errors.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace roadcap {

Pollutant default_pollutant(PollutantId id) noexcept
{
    switch (id) {
    case PollutantId::CO: return {id, 3.76e-10, false};
    case PollutantId::CO2: return {id, 3.3e-10, false};
    case PollutantId::NO2: return {id, 10.0e-10, false};
    case PollutantId::SO2: return {id, 2.46e-10, false};
    case PollutantId::PM2_5: return {id, 2.5e-6, true};
    case PollutantId::PM10: return {id, 1.0e-6, true};
    }
    return {id, 3.76e-10, false};
}

std::string_view pollutant_name(PollutantId id) noexcept
{
    switch (id) {
    case PollutantId::CO: return "CO";
    case PollutantId::CO2: return "CO2";
    case PollutantId::NO2: return "NO2";
    case PollutantId::SO2: return "SO2";
    case PollutantId::PM2_5: return "PM2.5";
    case PollutantId::PM10: return "PM10";
    }
    return "?";
}

PollutantId parse_pollutant(std::string_view name)
{
    std::string upper;
    for (char c : name) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    std::replace(upper.begin(), upper.end(), '_', '.');
    for (auto id : all_pollutants) {
        if (upper == pollutant_name(id)) {
            return id;
        }
    }
    throw ValidationError("unknown pollutant '" + std::string(name) + "'");
}

} // namespace roadcap
