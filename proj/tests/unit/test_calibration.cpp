#include "roadcap/calibration.hpp"
#include "roadcap/capacity.hpp"
#include "roadcap/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace roadcap;

namespace {

struct Expected {
    double field, adjusted, absolute_error, relative_error;
};

std::map<std::pair<std::string, double>, Expected> read_expected()
{
    std::ifstream in(test::source_dir() / "tests" / "oracles" / "table2_expected.csv");
    std::string line;
    std::getline(in, line);
    std::map<std::pair<std::string, double>, Expected> out;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell[6];
        for (auto& c : cell) {
            std::getline(ss, c, ',');
        }
        out[{cell[0], std::stod(cell[1])}] = {std::stod(cell[2]), std::stod(cell[3]), std::stod(cell[4]),
                                              std::stod(cell[5])};
    }
    return out;
}

bool rel_close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-300);
}

std::filesystem::path write_file(const std::string& name, const std::string& text)
{
    const auto p = test::scratch_dir(("calibration_" + name).c_str()) / (name + ".csv");
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_SUITE("calibration")
{
    TEST_CASE("bundled table matches the spreadsheet recomputation")
    {
        auto samples = read_simulated_csv(test::data_dir() / "table2_simulated.csv");
        samples = add_background(std::move(samples), background_policy(default_constraints()));
        const auto report = calibrate(samples, read_field_csv(test::data_dir() / "field_measurements.csv"));
        const auto expected = read_expected();
        REQUIRE(report.rows.size() == expected.size());
        for (const auto& r : report.rows) {
            const auto it = expected.find({std::string(pollutant_name(r.pollutant)), r.distance_m});
            REQUIRE(it != expected.end());
            CHECK(rel_close(r.field, it->second.field, 1e-12));
            CHECK(rel_close(r.simulated_adjusted, it->second.adjusted, 1e-9));
            CHECK(rel_close(r.absolute_error, it->second.absolute_error, 1e-9));
            CHECK(rel_close(r.relative_error, it->second.relative_error, 1e-9));
        }
    }

    TEST_CASE("within-10% flag at 9.9% and 10.1%")
    {
        std::vector<FieldMeasurement> field{{PollutantId::NO2, 30.0, 100.0, ConcentrationUnit::ug_per_m3}};
        std::vector<MonitorSample> inside{{PollutantId::NO2, 30.0, 2.0, 109.9e-9, 0.0, 109.9e-9, std::nullopt}};
        const auto a = calibrate(inside, field);
        CHECK(a.overall_max_relative_error == doctest::Approx(0.099).epsilon(1e-9));
        CHECK(a.within_10_percent);
        std::vector<MonitorSample> outside{{PollutantId::NO2, 30.0, 2.0, 110.1e-9, 0.0, 110.1e-9, std::nullopt}};
        const auto b = calibrate(outside, field);
        CHECK(b.overall_max_relative_error == doctest::Approx(0.101).epsilon(1e-9));
        CHECK_FALSE(b.within_10_percent);
        // Under-prediction counts the same way.
        std::vector<MonitorSample> low{{PollutantId::NO2, 30.0, 2.0, 89.9e-9, 0.0, 89.9e-9, std::nullopt}};
        CHECK_FALSE(calibrate(low, field).within_10_percent);
    }

    TEST_CASE("missing simulated rows are reported but excluded from the maxima")
    {
        std::vector<FieldMeasurement> field{{PollutantId::CO, 30.0, 1.0, ConcentrationUnit::mg_per_m3},
                                            {PollutantId::CO, 100.0, 1.0, ConcentrationUnit::mg_per_m3}};
        std::vector<MonitorSample> sim{{PollutantId::CO, 30.0, 2.0, 1.05e-6, 0.0, 1.05e-6, std::nullopt}};
        const auto r = calibrate(sim, field);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[1].error.has_value());
        CHECK(r.overall_max_relative_error == doctest::Approx(0.05).epsilon(1e-9));
        CHECK(r.max_relative_error[PollutantId::CO].has_value());
        CHECK_FALSE(r.max_relative_error[PollutantId::SO2].has_value());
    }

    TEST_CASE("zero field value uses the division floor")
    {
        std::vector<FieldMeasurement> field{{PollutantId::SO2, 30.0, 0.0, ConcentrationUnit::ug_per_m3}};
        std::vector<MonitorSample> sim{{PollutantId::SO2, 30.0, 2.0, 1e-9, 0.0, 1e-9, std::nullopt}};
        const auto r = calibrate(sim, field);
        CHECK(r.rows[0].degenerate);
        CHECK(std::isfinite(r.rows[0].relative_error));
    }

    TEST_CASE("unit tag is mandatory")
    {
        const auto ok = write_file("ok", "pollutant,distance_m,field_value,unit\nCO,30,0.4,mg/m3\n");
        CHECK(read_field_csv(ok).size() == 1);
        const auto missing = write_file("missing", "pollutant,distance_m,field_value\nCO,30,0.4\n");
        CHECK_THROWS((void)read_field_csv(missing));
        const auto blank = write_file("blank", "pollutant,distance_m,field_value,unit\nCO,30,0.4,\n");
        CHECK_THROWS((void)read_field_csv(blank));
        CHECK_THROWS_AS((void)read_field_csv("/nonexistent/field.csv"), IoError);
    }

    TEST_CASE("report outputs")
    {
        std::vector<FieldMeasurement> field{{PollutantId::CO, 30.0, 1.0, ConcentrationUnit::mg_per_m3}};
        std::vector<MonitorSample> sim{{PollutantId::CO, 30.0, 2.0, 1.05e-6, 0.0, 1.05e-6, std::nullopt}};
        const auto r = calibrate(sim, field);
        const auto dir = test::scratch_dir("calibration_out");
        write_calibration_csv(r, dir / "calibration.csv");
        CHECK(std::filesystem::file_size(dir / "calibration.csv") > 0);
        CHECK(format_calibration_table(r).find("CO") != std::string::npos);
    }
}
