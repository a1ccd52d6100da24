#include "roadcap/particles.hpp"

#include "roadcap/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

namespace roadcap {

void DpmConfig::validate() const
{
    if (max_steps < 1 || !(step_factor > 0.0)) {
        throw ValidationError("DPM max_steps must be >= 1 and step_factor > 0");
    }
    if (particles < 1) {
        throw ValidationError("DPM needs at least one particle");
    }
    if (!(particle_density > 0.0) || !(time_scale_constant > 0.0)) {
        throw ValidationError("DPM particle density and time-scale constant must be > 0");
    }
}

unsigned worker_threads(unsigned requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("ROADCAP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr double ns_per_s = 1e9;

struct Vec3 {
    double x{0.0}, y{0.0}, z{0.0};
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

// Moves a cell index along one axis until it brackets x. The caller has
// already handled positions outside the axis.
inline std::size_t walk(std::span<const double> faces, std::size_t i, double x)
{
    while (i > 0 && x < faces[i]) {
        --i;
    }
    while (i + 2 < faces.size() && x >= faces[i + 1]) {
        ++i;
    }
    return i;
}

enum class Fate { escaped, deposited, stuck };

struct Tracker {
    const FlowState& flow;
    const StructuredMesh& mesh;
    const DpmConfig& cfg;
    const RoadStrip& road;
    double injection_speed;
    double tau_stokes; // rho_p d^2 / (18 mu)
    double diameter;
    double rho;
    double mu;
    Vec3 g_buoyant;
    double c_mu34;

    Fate run(std::size_t id, std::vector<std::int64_t>& residence, std::vector<TrajectoryPoint>* path,
             std::uint64_t& steps) const
    {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(static_cast<std::uint64_t>(id) >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        const auto xf = mesh.xf(), yf = mesh.yf(), zf = mesh.zf();
        const double lx = mesh.lx(), ly = mesh.ly(), lz = mesh.lz();

        Vec3 pos{road.x_min + (road.x_max - road.x_min) * unit(rng), road.y_min + (road.y_max - road.y_min) * unit(rng),
                 road.emission_height};
        // Spray direction lies in the horizontal plane, split between x and y.
        Vec3 up{injection_speed / std::sqrt(2.0), injection_speed / std::sqrt(2.0), 0.0};
        const auto start = mesh.locate({pos.x, pos.y, pos.z});
        if (!start) {
            return Fate::escaped;
        }
        auto [i, j, k] = mesh.ijk(*start);
        double t = 0.0;
        double eddy_age = 0.0;
        double eddy_cap = std::numeric_limits<double>::infinity();
        double last_dt = 0.0;
        double time_scale = 0.0;
        Vec3 fluct;
        if (path) {
            path->push_back({id, 0, pos.x, pos.y, pos.z, 0.0});
        }

        for (int step = 1; step <= cfg.max_steps; ++step) {
            const auto c = mesh.index(i, j, k);
            const Vec3 uf{flow.u[c], flow.v[c], flow.w[c]};
            if (cfg.random_walk) {
                // Eddies renew as a Poisson process at the local rate 1/T_L,
                // which keeps a well-mixed tracer well mixed where T_L varies.
                // The crossing time caps the life of an eddy for inertial
                // particles.
                const double kk = flow.k[c];
                const double eps = flow.epsilon[c];
                const double tl = cfg.time_scale_constant * kk / eps;
                const bool renew = step == 1 || eddy_age >= eddy_cap || unit(rng) < -std::expm1(-last_dt / tl);
                if (renew) {
                    const double sigma = std::sqrt(2.0 * kk / 3.0);
                    fluct = {sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng)};
                    eddy_age = 0.0;
                    eddy_cap = std::numeric_limits<double>::infinity();
                    const double le = c_mu34 * std::pow(kk, 1.5) / eps;
                    const double slip = norm(uf + fluct - up);
                    if (tau_stokes * slip > le) {
                        const double arg = 1.0 - le / (tau_stokes * slip);
                        if (arg > 0.0) {
                            eddy_cap = -tau_stokes * std::log(arg);
                        }
                    }
                }
                time_scale = tl;
            }
            const Vec3 carrier = uf + fluct;

            // Schiller-Naumann correction of the Stokes response time.
            const double re = rho * diameter * norm(carrier - up) / mu;
            const double drag = re < 1000.0 ? 1.0 + 0.15 * std::pow(re, 0.687) : 0.0183 * re;
            const double tau = tau_stokes / drag;
            const Vec3 target = carrier + tau * g_buoyant;

            const double d[3] = {mesh.dx()[i], mesh.dy()[j], mesh.dz()[k]};
            const double sp[3] = {std::max(std::abs(up.x), std::abs(target.x)), std::max(std::abs(up.y), std::abs(target.y)),
                                  std::max(std::abs(up.z), std::abs(target.z))};
            double transit = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 3; ++a) {
                if (sp[a] > 0.0) {
                    transit = std::min(transit, d[a] / sp[a]);
                }
            }
            if (!std::isfinite(transit)) {
                return Fate::stuck; // nothing moves this particle
            }
            double dt = transit / cfg.step_factor;
            if (cfg.random_walk) {
                dt = std::min({dt, 0.5 * time_scale, std::max(eddy_cap - eddy_age, 0.0)});
            }
            const double decay = tau > 0.0 ? std::exp(-dt / tau) : 0.0;
            const double memory = tau > 0.0 ? tau * (1.0 - decay) : 0.0;
            pos = pos + dt * target + memory * (up - target);
            up = target + decay * (up - target);
            residence[c] += std::llround(dt * ns_per_s);
            t += dt;
            eddy_age += dt;
            last_dt = dt;
            ++steps;

            bool leave = false;
            if (pos.z < 0.0) {
                if (cfg.trap_on_ground) {
                    if (path) path->push_back({id, step, pos.x, pos.y, 0.0, t});
                    return Fate::deposited;
                }
                pos.z = -pos.z;
                up.z = -up.z;
                fluct.z = -fluct.z;
            }
            if (pos.z > lz) {
                if (cfg.reflect_sides) {
                    pos.z = 2.0 * lz - pos.z;
                    up.z = -up.z;
                    fluct.z = -fluct.z;
                } else {
                    leave = true;
                }
            }
            if (pos.y < 0.0 || pos.y > ly) {
                if (cfg.reflect_sides) {
                    pos.y = pos.y < 0.0 ? -pos.y : 2.0 * ly - pos.y;
                    up.y = -up.y;
                    fluct.y = -fluct.y;
                } else {
                    leave = true;
                }
            }
            if (pos.x < 0.0 || pos.x > lx) {
                leave = true;
            }
            // A reflection larger than the domain is treated as an exit.
            if (pos.z < 0.0 || pos.z > lz || pos.y < 0.0 || pos.y > ly) {
                leave = true;
            }
            if (path) {
                path->push_back({id, step, pos.x, pos.y, pos.z, t});
            }
            if (leave) {
                return Fate::escaped;
            }
            i = walk(xf, i, pos.x);
            j = walk(yf, j, pos.y);
            k = walk(zf, k, pos.z);
        }
        return Fate::stuck;
    }
};

} // namespace

DpmResult track_particles(const FlowState& flow, const StructuredMesh& mesh, const SourceSpec& source,
                          const Pollutant& pollutant, const FluidProperties& fluid, const TurbulenceConstants& tc,
                          const DpmConfig& cfg)
{
    cfg.validate();
    fluid.validate();
    const auto n = mesh.cell_count();
    if (flow.u.size() != n || flow.k.size() != n) {
        throw ValidationError("flow state does not match the mesh");
    }
    const auto& road = source.geometry;
    if (!mesh.contains({road.x_min, road.y_min, road.emission_height}) ||
        !mesh.contains({road.x_max, road.y_max, road.emission_height})) {
        throw ValidationError("source geometry lies outside the mesh");
    }

    const double d = pollutant.particle_diameter;
    const double buoyancy = cfg.gravity ? 1.0 - fluid.density / cfg.particle_density : 0.0;
    const Tracker tracker{flow,
                          mesh,
                          cfg,
                          road,
                          source.injection_speed,
                          cfg.particle_density * d * d / (18.0 * fluid.viscosity),
                          d,
                          fluid.density,
                          fluid.viscosity,
                          {buoyancy * fluid.gravity.x, buoyancy * fluid.gravity.y, buoyancy * fluid.gravity.z},
                          std::pow(tc.c_mu, 0.75)};

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_threads(cfg.threads), cfg.particles));
    struct Partial {
        std::vector<std::int64_t> residence;
        std::vector<TrajectoryPoint> path;
        std::size_t escaped{0}, deposited{0}, stuck{0};
        std::uint64_t steps{0};
    };
    std::vector<Partial> parts(workers);
    auto work = [&](unsigned w) {
        auto& part = parts[w];
        part.residence.assign(n, 0);
        const std::size_t lo = cfg.particles * w / workers;
        const std::size_t hi = cfg.particles * (w + 1) / workers;
        for (std::size_t id = lo; id < hi; ++id) {
            auto* path = id < cfg.record_trajectories ? &part.path : nullptr;
            switch (tracker.run(id, part.residence, path, part.steps)) {
            case Fate::escaped: ++part.escaped; break;
            case Fate::deposited: ++part.deposited; break;
            case Fate::stuck: ++part.stuck; break;
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    DpmResult result;
    std::vector<std::int64_t> total(n, 0);
    for (auto& part : parts) {
        for (std::size_t c = 0; c < n; ++c) {
            total[c] += part.residence[c];
        }
        result.trajectories.insert(result.trajectories.end(), part.path.begin(), part.path.end());
        result.escaped += part.escaped;
        result.deposited += part.deposited;
        result.stuck += part.stuck;
        result.total_steps += part.steps;
    }

    auto& est = result.estimate;
    est.pollutant = pollutant;
    est.source_rate = source.rate_kg_per_s[pollutant.id];
    est.converged = true;
    const double per_particle = est.source_rate / static_cast<double>(cfg.particles);
    est.concentration.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        est.concentration[c] = per_particle * (static_cast<double>(total[c]) / ns_per_s) / mesh.volume(c);
    }
    return result;
}

void write_trajectory_csv(const std::vector<TrajectoryPoint>& points, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("particle_id,step,x,y,z,t\n");
        for (const auto& p : points) {
            out.print("{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", p.particle_id, p.step, p.x, p.y, p.z, p.t);
        }
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

} // namespace roadcap
