#include "roadcap/errors.hpp"
#include "roadcap/fleet.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace roadcap;

namespace {

struct Bundled {
    FleetSpec fleet = read_fleet_csv(test::data_dir() / "fleet.csv");
    EmissionFactorTable ef = read_ef_csv(test::data_dir() / "ef.csv");
    TrafficState traffic{2'661'896.0, 90.0, 0.0};
};

// Exact rational recomputation of the bundled activity x factor sums.
constexpr double oracle_total_kg_yr[] = {9948139.690800505, 9495388719.668509, 8248764.897618302,
                                         10717174.013932988, 422982.3196441475, 422982.3196441475};
constexpr double oracle_rate_kg_s[] = {0.0008020002717475834, 0.7655003417940842, 0.0006649998788808191,
                                       0.0008639983694125993, 3.41000373781173e-05, 3.41000373781173e-05};

} // namespace

TEST_SUITE("fleet")
{
    TEST_CASE("bundled fleet parses and validates")
    {
        Bundled b;
        REQUIRE(b.fleet.classes.size() == 6);
        CHECK(b.fleet.classes[0].name == "Medium-small car");
        CHECK(b.fleet.find("Coach").pce == 1.5);
        CHECK(b.ef.size() == 36);
        CHECK_THROWS_AS((void)b.fleet.find("Tram"), ConfigError);
    }

    TEST_CASE("inventory totals match the spreadsheet oracle")
    {
        Bundled b;
        const auto inv = compute_inventory(b.fleet, b.ef, b.traffic);
        for (auto id : all_pollutants) {
            const auto i = static_cast<std::size_t>(id);
            CHECK(inv.totals[id] == doctest::Approx(oracle_total_kg_yr[i]).epsilon(1e-12));
        }
        double sum = 0.0;
        for (const auto& row : inv.per_class) {
            sum += row[PollutantId::CO];
        }
        CHECK(sum == doctest::Approx(inv.totals[PollutantId::CO]).epsilon(1e-14));
    }

    TEST_CASE("source rates scale by road share and seconds per year")
    {
        Bundled b;
        const auto src = inventory_to_source(compute_inventory(b.fleet, b.ef, b.traffic), 300.0, 118'000.0);
        for (auto id : all_pollutants) {
            CHECK(src.rate_kg_per_s[id] ==
                  doctest::Approx(oracle_rate_kg_s[static_cast<std::size_t>(id)]).epsilon(1e-12));
        }
        CHECK_THROWS_AS((void)inventory_to_source(compute_inventory(b.fleet, b.ef, b.traffic), 500.0, 300.0),
                        ValidationError);
    }

    TEST_CASE("transfer coefficient scales every entry")
    {
        Bundled b;
        const auto one = compute_inventory(b.fleet, b.ef, b.traffic, 1.0);
        const auto half = compute_inventory(b.fleet, b.ef, b.traffic, 0.5);
        for (auto id : all_pollutants) {
            CHECK(half.totals[id] == doctest::Approx(0.5 * one.totals[id]).epsilon(1e-14));
        }
    }

    TEST_CASE("aggregate q with weights")
    {
        Bundled b;
        const auto inv = compute_inventory(b.fleet, b.ef, b.traffic);
        CouplingCoefficients c;
        c.alpha = 0.5;
        c.beta = 2.0;
        CHECK(aggregate_q(inv, c) == doctest::Approx(4788171577.089828).epsilon(1e-12));
    }

    TEST_CASE("missing factor names the pair")
    {
        Bundled b;
        EmissionFactorTable partial;
        partial.set("Medium-small car", PollutantId::CO, 1.0);
        try {
            (void)compute_inventory(b.fleet, partial, b.traffic);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("Medium-small car") != std::string::npos);
        }
    }

    TEST_CASE("fleet validation")
    {
        Bundled b;
        auto bad = b.fleet;
        bad.classes[0].type_ratio = 0.7;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad = b.fleet;
        bad.classes[1].pce = 0.5;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        TrafficState t;
        t.annual_volume = -1.0;
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }

    TEST_CASE("inventory csv is written")
    {
        Bundled b;
        const auto dir = test::scratch_dir("fleet");
        write_inventory_csv(compute_inventory(b.fleet, b.ef, b.traffic), dir / "inventory.csv");
        std::ifstream in(dir / "inventory.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "class,pollutant,kg_per_year");
    }
}
