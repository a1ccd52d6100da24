#include "roadcap/errors.hpp"
#include "roadcap/pollutant.hpp"
#include "roadcap/units.hpp"

#include <doctest.h>

#include <random>

using namespace roadcap;

TEST_SUITE("units")
{
    TEST_CASE("concentration factors")
    {
        CHECK(to_kg_per_m3_factor(ConcentrationUnit::kg_per_m3) == 1.0);
        CHECK(to_kg_per_m3_factor(ConcentrationUnit::mg_per_m3) == 1e-6);
        CHECK(to_kg_per_m3_factor(ConcentrationUnit::ug_per_m3) == 1e-9);
        CHECK(to_internal(4.0, ConcentrationUnit::mg_per_m3) == doctest::Approx(4e-6).epsilon(1e-15));
        CHECK(from_internal(2e-8, ConcentrationUnit::ug_per_m3) == doctest::Approx(20.0).epsilon(1e-15));
    }

    TEST_CASE("round trip through every unit stays within 1e-12")
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> exponent(-12.0, 3.0);
        for (int n = 0; n < 1000; ++n) {
            const double v = std::pow(10.0, exponent(rng));
            for (auto u : {ConcentrationUnit::kg_per_m3, ConcentrationUnit::mg_per_m3, ConcentrationUnit::ug_per_m3}) {
                const double back = from_internal(to_internal(v, u), u);
                REQUIRE(std::abs(back - v) <= 1e-12 * v);
            }
        }
    }

    TEST_CASE("unit labels parse")
    {
        CHECK(parse_concentration_unit("mg/m3") == ConcentrationUnit::mg_per_m3);
        CHECK(parse_concentration_unit("ug/m3") == ConcentrationUnit::ug_per_m3);
        CHECK(parse_concentration_unit("µg/m³") == ConcentrationUnit::ug_per_m3);
        CHECK(parse_concentration_unit("kg/m3") == ConcentrationUnit::kg_per_m3);
        CHECK_THROWS_AS((void)parse_concentration_unit("ppm"), ValidationError);
        for (auto u : {ConcentrationUnit::kg_per_m3, ConcentrationUnit::mg_per_m3, ConcentrationUnit::ug_per_m3}) {
            CHECK(parse_concentration_unit(unit_label(u)) == u);
        }
    }

    TEST_CASE("seconds per year")
    {
        CHECK(seconds_per_year == 31'536'000.0);
    }
}

TEST_SUITE("pollutant")
{
    TEST_CASE("names round trip in fixed order")
    {
        const char* expected[] = {"CO", "CO2", "NO2", "SO2", "PM2.5", "PM10"};
        for (std::size_t i = 0; i < pollutant_count; ++i) {
            CHECK(pollutant_name(all_pollutants[i]) == expected[i]);
            CHECK(parse_pollutant(expected[i]) == all_pollutants[i]);
        }
        CHECK(parse_pollutant("pm2_5") == PollutantId::PM2_5);
        CHECK_THROWS_AS((void)parse_pollutant("O3"), ValidationError);
    }

    TEST_CASE("default diameters")
    {
        CHECK(default_pollutant(PollutantId::PM2_5).particle_diameter == 2.5e-6);
        CHECK(default_pollutant(PollutantId::PM10).particle_diameter == 1.0e-6);
        CHECK(default_pollutant(PollutantId::PM10).is_particulate);
        CHECK_FALSE(default_pollutant(PollutantId::CO).is_particulate);
    }
}
