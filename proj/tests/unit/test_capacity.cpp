#include "roadcap/capacity.hpp"
#include "roadcap/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>

using namespace roadcap;

namespace {

FleetSpec bundled_fleet() { return read_fleet_csv(test::data_dir() / "fleet.csv"); }

PerPollutant<double> unit_conc(double v)
{
    return PerPollutant<double>(v);
}

} // namespace

TEST_SUITE("capacity")
{
    TEST_CASE("default ceilings and background policy")
    {
        const auto cs = default_constraints();
        CHECK(cs.ceiling[PollutantId::CO] == doctest::Approx(4e-6).epsilon(1e-15));
        CHECK(cs.ceiling[PollutantId::CO2] == doctest::Approx(1.5e-3).epsilon(1e-15));
        CHECK(cs.ceiling[PollutantId::SO2] == doctest::Approx(2e-8).epsilon(1e-15));
        CHECK(cs.input_unit[PollutantId::NO2] == ConcentrationUnit::ug_per_m3);
        const auto bg = background_policy(cs);
        CHECK(bg[PollutantId::CO] == doctest::Approx(2.8e-6).epsilon(1e-15));
        CHECK(background_policy(cs, 0.0)[PollutantId::PM10] == 0.0);
    }

    TEST_CASE("inversion: finite, fixed point and sentinels")
    {
        auto cs = default_constraints();
        const auto bg = background_policy(cs);
        // Simulated = ceiling at the current traffic gives T_max = current traffic.
        const double traffic = 2'661'896.0;
        PerPollutant<double> cu;
        for (auto id : all_pollutants) {
            cu[id] = (cs.ceiling[id] - bg[id]) / traffic;
        }
        const auto v = invert_capacity(cu, cs, bg);
        for (auto id : all_pollutants) {
            CHECK(v[id].status == CapacityStatus::finite);
            CHECK(v[id].t_max == doctest::Approx(traffic).epsilon(1e-15));
        }
        cu[PollutantId::CO] = 0.0;
        CHECK(invert_capacity(cu, cs, bg)[PollutantId::CO].status == CapacityStatus::not_binding);
        auto high = bg;
        high[PollutantId::SO2] = cs.ceiling[PollutantId::SO2];
        const auto e = invert_capacity(cu, cs, high)[PollutantId::SO2];
        CHECK(e.status == CapacityStatus::background_exceeds);
        CHECK(e.t_max == 0.0);
        cu[PollutantId::NO2] = -1.0;
        CHECK_THROWS_AS((void)invert_capacity(cu, cs, bg), ValidationError);
    }

    TEST_CASE("reference-volume inversion is exact at the fixed point")
    {
        auto cs = default_constraints();
        const auto bg = background_policy(cs);
        const MonitorPoint mon{600.0, 2.0};
        const auto fleet = read_fleet_csv(test::data_dir() / "fleet.csv");
        // Many volumes; the c_u form misses some of these by one ulp.
        for (double traffic : {2'661'896.0, 1.0, 37.0, 123'456'789.0, 999'983.0}) {
            std::vector<MonitorSample> samples;
            PerPollutant<double> raw;
            for (auto id : all_pollutants) {
                raw[id] = cs.ceiling[id] - bg[id];
                samples.push_back({id, mon.distance_m, mon.height_m, raw[id], bg[id], cs.ceiling[id], std::nullopt});
            }
            const auto v = invert_at_reference(raw, traffic, cs, bg);
            const TrafficState ref{traffic, 90.0, 0.0};
            const auto report = capacity_from_samples(samples, ref, mon, cs, bg, fleet);
            for (auto id : all_pollutants) {
                CHECK(v[id].t_max == traffic);
                CHECK(report.entries[id].value.t_max == traffic);
                CHECK(report.entries[id].unit_concentration == raw[id] / traffic);
            }
        }
        PerPollutant<double> raw(1e-9);
        raw[PollutantId::CO] = 0.0;
        const auto s = invert_at_reference(raw, 10.0, cs, bg);
        CHECK(s[PollutantId::CO].status == CapacityStatus::not_binding);
        CHECK(s[PollutantId::SO2].t_max == doctest::Approx(10.0 * 6e-9 / 1e-9).epsilon(1e-12));
        CHECK_THROWS_AS((void)invert_at_reference(raw, 0.0, cs, bg), ValidationError);
    }

    TEST_CASE("split sums to the total for many totals")
    {
        const auto fleet = bundled_fleet();
        for (std::int64_t t : {0LL, 1LL, 7LL, 999LL, 909'662LL, 22'020'013LL, 123'456'789LL}) {
            const auto c = split_by_class(t, fleet);
            REQUIRE(c.size() == fleet.classes.size());
            CHECK(std::accumulate(c.begin(), c.end(), std::int64_t{0}) == t);
            for (std::size_t i = 1; i < c.size(); ++i) {
                CHECK(std::abs(static_cast<double>(c[i]) - fleet.classes[i].type_ratio * static_cast<double>(t)) <= 0.5);
            }
        }
    }

    TEST_CASE("standard vehicles use pce weights")
    {
        const auto fleet = bundled_fleet();
        const std::vector<std::int64_t> counts{563990, 59128, 54580, 31838, 177384, 22742};
        CHECK(to_standard_vehicles(counts, fleet) == doctest::Approx(1334929.0).epsilon(1e-15));
    }

    TEST_CASE("binding constraint ignores sentinels and breaks ties in order")
    {
        const auto fleet = bundled_fleet();
        PerPollutant<std::int64_t> totals(1000);
        auto r = report_from_totals(totals, fleet);
        CHECK(binding_constraint(r) == PollutantId::CO);
        r.entries[PollutantId::CO].value.status = CapacityStatus::not_binding;
        CHECK(binding_constraint(r) == PollutantId::CO2);
        r.entries[PollutantId::PM10].value = {CapacityStatus::background_exceeds, 0.0};
        CHECK(binding_constraint(r) == PollutantId::PM10);
        for (auto id : all_pollutants) {
            r.entries[id].value.status = CapacityStatus::not_binding;
        }
        CHECK_FALSE(binding_constraint(r).has_value());
    }

    TEST_CASE("unit concentration needs a sample per pollutant at the monitor")
    {
        std::vector<MonitorSample> samples;
        for (auto id : all_pollutants) {
            samples.push_back({id, 600.0, 2.0, 1e-9, 0.0, 1e-9, std::nullopt});
        }
        const TrafficState ref{2'000'000.0, 90.0, 0.0};
        const auto cu = unit_concentration(samples, ref, {600.0, 2.0});
        CHECK(cu[PollutantId::NO2] == doctest::Approx(5e-16).epsilon(1e-14));
        samples.pop_back();
        CHECK_THROWS((void)unit_concentration(samples, ref, {600.0, 2.0}));
        CHECK_THROWS((void)unit_concentration(samples, TrafficState{0.0, 90.0, 0.0}, {600.0, 2.0}));
    }

    TEST_CASE("bisection on closed-form forwards")
    {
        const auto lin = bisection_invert([](double q) { return 3e-9 * q; }, 2e-6, 0.0, 1e4, 1e-18);
        CHECK(lin.converged);
        CHECK(lin.q == doctest::Approx(2e-6 / 3e-9).epsilon(1e-9));
        const auto quad = bisection_invert([](double q) { return 3e-6 * q * q; }, 2.0, 0.0, 2000.0, 1e-12);
        CHECK(quad.converged);
        CHECK(quad.q == doctest::Approx(816.496580927726).epsilon(1e-10));
        const auto edge = bisection_invert([](double q) { return q; }, 0.0, 0.0, 1.0, 1e-12);
        CHECK(edge.iterations == 0);
        CHECK(edge.q == 0.0);
        CHECK_THROWS_AS((void)bisection_invert([](double q) { return q; }, 5.0, 0.0, 1.0, 1e-12), ValidationError);
        CHECK_THROWS_AS((void)bisection_invert([](double q) { return q; }, 0.5, 1.0, 0.0, 1e-12), ValidationError);
        // Unreachable tolerance: the 64-halving cap ends the search.
        const auto capped = bisection_invert([](double q) { return q > 0.5 ? 1.0 : 0.0; }, 0.5, 0.0, 1.0, 1e-3);
        CHECK_FALSE(capped.converged);
        CHECK(capped.iterations == 64);
    }

    TEST_CASE("bisection agrees with the direct inversion on a linear forward")
    {
        const auto cs = default_constraints();
        const auto bg = background_policy(cs);
        const auto cu = unit_conc(1.7e-15);
        const auto direct = invert_capacity(cu, cs, bg);
        for (auto id : all_pollutants) {
            const double target = cs.ceiling[id];
            const auto b = bisection_invert([&](double t) { return bg[id] + cu[id] * t; }, target, 0.0, 1e13,
                                            1e-9 * (cs.ceiling[id] - bg[id]));
            CHECK(b.converged);
            CHECK(std::abs(b.q - direct[id].t_max) <= 1e-8 * direct[id].t_max);
        }
    }

    TEST_CASE("csv and json reports")
    {
        const auto fleet = bundled_fleet();
        PerPollutant<std::int64_t> totals;
        totals[PollutantId::SO2] = 909'662;
        totals[PollutantId::NO2] = 2'465'373;
        totals[PollutantId::PM2_5] = 3'236'022;
        totals[PollutantId::CO] = 7'718'717;
        totals[PollutantId::CO2] = 8'037'217;
        totals[PollutantId::PM10] = 22'020'013;
        const auto r = report_from_totals(totals, fleet);
        const auto dir = test::scratch_dir("capacity");
        write_capacity_csv(r, dir / "capacity.csv");
        write_capacity_json(r, dir / "capacity.json");
        std::ifstream csv(dir / "capacity.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == "vehicle_type,type_ratio,PM2.5,PM10,CO,CO2,NO2,SO2");
        std::string text((std::istreambuf_iterator<char>(csv)), std::istreambuf_iterator<char>());
        CHECK(text.find("# binding constraint: SO2") != std::string::npos);
        std::ifstream js(dir / "capacity.json");
        const auto j = nlohmann::json::parse(js);
        CHECK(j.dump().find("909662") != std::string::npos);
    }
}
