#pragma once

// Grid-independence study: solve the same scenario on successively finer
// meshes and compare velocity magnitude and one species concentration along
// a fixed sample line.

#include "roadcap/config.hpp"
#include "roadcap/mesh.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace roadcap {

/// Equally spaced points from start to end inclusive.
struct SampleLine {
    Point3 start{};
    Point3 end{};
    std::size_t points{41};

    [[nodiscard]] std::vector<Point3> positions() const;
};

/// Along-road line through the road centre at 2 m height, y from 130 m to
/// 170 m in 41 points.
[[nodiscard]] SampleLine default_sample_line(const RoadStrip& road);

/// Interpolates a cell field at every line point; throws ValidationError if a
/// point is outside the mesh.
[[nodiscard]] std::vector<double> sample_line(const StructuredMesh& mesh, const std::vector<double>& field,
                                              const SampleLine& line);

/// What a forward solve hands back for one level.
struct LevelFields {
    StructuredMesh mesh;
    std::vector<double> speed;         // |U| per cell, m/s
    std::vector<double> concentration; // kg/m3 per cell
    bool converged{true};
    int iterations{0};
};

using LevelSolver = std::function<LevelFields(const MeshSpec&)>;

struct LevelReport {
    std::string name;
    std::size_t cells{0};
    bool ok{false}; // solve completed and was sampled
    bool converged{false};
    int iterations{0};
    std::string error;
    std::vector<double> speed;         // line samples
    std::vector<double> concentration; // line samples
};

struct PairReport {
    std::size_t coarse{0}; // level indices
    std::size_t fine{0};
    bool evaluated{false};
    double speed_deviation{0.0};
    double concentration_deviation{0.0};
    bool pass{false};
};

struct IndependenceReport {
    std::vector<Point3> line;
    std::vector<LevelReport> levels;
    std::vector<PairReport> pairs;
    double threshold{0.05};
    bool pass{false}; // every pair evaluated and below threshold
};

/// max_i |a_i - b_i| / |b_i| with b the reference (finer) samples. Reference
/// values below floor use floor as the denominator.
[[nodiscard]] double max_relative_deviation(const std::vector<double>& a, const std::vector<double>& b,
                                            double floor = 1e-30);

/// Compares two sampled levels. Both deviations must be strictly below the
/// threshold to pass.
[[nodiscard]] PairReport compare_levels(const LevelReport& coarse, const LevelReport& fine, double threshold = 0.05);

/// Runs `solve` on each level in order. A level whose solve throws is
/// recorded with its error and the pairs touching it are left unevaluated;
/// the remaining levels still run.
[[nodiscard]] IndependenceReport independence_study(const std::vector<MeshSpec>& levels, const LevelSolver& solve,
                                                    const SampleLine& line, double threshold = 0.05);

/// Mesh specs for named presets, carrying the configured road strip.
[[nodiscard]] std::vector<MeshSpec> level_specs(const RunConfig& cfg, const std::vector<std::string>& presets);

/// Forward solve of a run configuration on a given mesh: flow, then the
/// Eulerian field of `species`.
[[nodiscard]] LevelSolver scenario_solver(const RunConfig& cfg, PollutantId species = PollutantId::CO);

void write_independence_csv(const IndependenceReport& report, const std::filesystem::path& path);
void write_independence_json(const IndependenceReport& report, const std::filesystem::path& path);

} // namespace roadcap
