#include "roadcap/config.hpp"

#include "roadcap/errors.hpp"

#include <fmt/format.h>

#define TOML_HEADER_ONLY 1
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace roadcap {

RunConfig::RunConfig()
{
    for (auto id : all_pollutants) {
        pollutants[id] = default_pollutant(id);
    }
}

void RunConfig::set_mesh_preset(const std::string& name)
{
    const auto road = mesh.road;
    const auto budget = mesh.max_cells;
    mesh = mesh_preset(name);
    mesh.road = road;
    mesh.max_cells = budget;
    mesh_preset_name = name;
}

void RunConfig::validate() const
{
    traffic.validate();
    coupling.validate();
    fluid.validate();
    turbulence.validate();
    boundaries.validate(turbulence);
    solver.validate();
    dispersion.validate();
    dpm.config.validate();
    constraints.validate();
    if (!(network.modeled_length_m > 0.0) || network.network_length_m < network.modeled_length_m) {
        throw ValidationError("network length must be >= the modeled road length > 0");
    }
    if (!(background_fraction >= 0.0)) {
        throw ValidationError("background fraction must be >= 0");
    }
    if (monitors.empty()) {
        throw ValidationError("at least one monitor is required");
    }
}

namespace {

std::string kind_name(BoundaryKind k)
{
    switch (k) {
    case BoundaryKind::velocity_inlet: return "velocity_inlet";
    case BoundaryKind::pressure_outlet: return "pressure_outlet";
    case BoundaryKind::symmetry: return "symmetry";
    case BoundaryKind::wall: return "wall";
    }
    return "symmetry";
}

BoundaryKind parse_kind(const std::string& s, const std::string& where)
{
    if (s == "pressure_outlet") return BoundaryKind::pressure_outlet;
    if (s == "symmetry") return BoundaryKind::symmetry;
    if (s == "wall") return BoundaryKind::wall;
    throw ConfigError(fmt::format("{}: unknown boundary kind '{}' (pressure_outlet, symmetry, wall)", where, s));
}

// Key reader for one table that remembers which keys were consumed.
class Section {
public:
    Section(const toml::table* table, std::string name, std::vector<std::string>& unknown)
        : table_(table)
        , name_(std::move(name))
        , unknown_(unknown)
    {
    }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;
    ~Section()
    {
        if (!table_) {
            return;
        }
        for (auto&& [key, node] : *table_) {
            const std::string k(key.str());
            if (!used_.count(k)) {
                unknown_.push_back(name_.empty() ? k : name_ + "." + k);
            }
        }
    }

    [[nodiscard]] const toml::node* node(const std::string& key)
    {
        used_.insert(key);
        return table_ ? table_->get(key) : nullptr;
    }

    [[nodiscard]] std::string where(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    void get(const std::string& key, double& out)
    {
        if (const auto* n = node(key)) {
            const auto v = n->value<double>();
            if (!v) throw ConfigError(where(key) + ": expected a number");
            out = *v;
        }
    }
    void get(const std::string& key, bool& out)
    {
        if (const auto* n = node(key)) {
            const auto v = n->value<bool>();
            if (!v) throw ConfigError(where(key) + ": expected a boolean");
            out = *v;
        }
    }
    void get(const std::string& key, std::string& out)
    {
        if (const auto* n = node(key)) {
            const auto v = n->value<std::string>();
            if (!v) throw ConfigError(where(key) + ": expected a string");
            out = *v;
        }
    }
    void get(const std::string& key, std::int64_t& out)
    {
        if (const auto* n = node(key)) {
            const auto v = n->value<std::int64_t>();
            if (!v || !n->is_integer()) throw ConfigError(where(key) + ": expected an integer");
            out = *v;
        }
    }
    template <typename T>
    void get_count(const std::string& key, T& out)
    {
        std::int64_t v = static_cast<std::int64_t>(out);
        get(key, v);
        if (v < 0) throw ConfigError(where(key) + ": must be >= 0");
        out = static_cast<T>(v);
    }
    void get(const std::string& key, int& out)
    {
        std::int64_t v = out;
        get(key, v);
        out = static_cast<int>(v);
    }
    void get_path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base)
    {
        std::string s;
        get(key, s);
        if (!s.empty()) {
            std::filesystem::path p(s);
            out = (p.is_absolute() ? p : base / p).lexically_normal();
        }
    }
    void get_kind(const std::string& key, BoundaryKind& out)
    {
        std::string s;
        get(key, s);
        if (!s.empty()) out = parse_kind(s, where(key));
    }
    std::vector<double> get_numbers(const std::string& key)
    {
        std::vector<double> v;
        if (const auto* n = node(key)) {
            const auto* arr = n->as_array();
            if (!arr) throw ConfigError(where(key) + ": expected an array of numbers");
            for (const auto& e : *arr) {
                const auto x = e.value<double>();
                if (!x) throw ConfigError(where(key) + ": expected an array of numbers");
                v.push_back(*x);
            }
        }
        return v;
    }
    std::vector<std::string> get_strings(const std::string& key)
    {
        std::vector<std::string> v;
        if (const auto* n = node(key)) {
            const auto* arr = n->as_array();
            if (!arr) throw ConfigError(where(key) + ": expected an array of strings");
            for (const auto& e : *arr) {
                const auto x = e.value<std::string>();
                if (!x) throw ConfigError(where(key) + ": expected an array of strings");
                v.push_back(*x);
            }
        }
        return v;
    }
    [[nodiscard]] const toml::table* sub(const std::string& key)
    {
        const auto* n = node(key);
        if (n && !n->is_table()) throw ConfigError(where(key) + ": expected a table");
        return n ? n->as_table() : nullptr;
    }

private:
    const toml::table* table_;
    std::string name_;
    std::vector<std::string>& unknown_;
    std::set<std::string> used_;
};

void read_axis(Section& s, const std::string& prefix, GradedAxis& axis)
{
    s.get(prefix + "_extent", axis.extent);
    s.get(prefix + "_min_spacing", axis.min_spacing);
    s.get(prefix + "_max_spacing", axis.max_spacing);
    s.get(prefix + "_growth_ratio", axis.growth_ratio);
    auto band = s.get_numbers(prefix + "_refined_band");
    if (!band.empty()) {
        if (band.size() != 2) throw ConfigError(s.where(prefix + "_refined_band") + ": expected [lo, hi]");
        axis.refined_band = {band[0], band[1]};
    }
}

} // namespace

RunConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir, bool check_files)
{
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e;
        throw ConfigError("TOML parse error: " + os.str());
    }
    RunConfig cfg;
    cfg.base_dir = base_dir;
    cfg.files.fleet = (base_dir / "data/g30ys/fleet.csv").lexically_normal();
    cfg.files.emission_factors = (base_dir / "data/g30ys/ef.csv").lexically_normal();
    std::vector<std::string> unknown;
    {
        Section top(&root, "", unknown);
        static const std::vector<std::string> sections{"scenario", "files",      "traffic", "network",  "mesh",
                                                       "fluid",    "turbulence", "inlet",   "solver",   "dispersion",
                                                       "dpm",      "capacity",   "monitors", "run"};
        std::map<std::string, const toml::table*> tables;
        for (const auto& name : sections) {
            tables[name] = top.sub(name);
        }

        {
            Section s(tables["scenario"], "scenario", unknown);
            s.get("name", cfg.scenario);
        }
        {
            Section s(tables["files"], "files", unknown);
            s.get_path("fleet", cfg.files.fleet, base_dir);
            s.get_path("emission_factors", cfg.files.emission_factors, base_dir);
            s.get_path("field_measurements", cfg.files.field_measurements, base_dir);
        }
        {
            Section s(tables["traffic"], "traffic", unknown);
            s.get("annual_volume", cfg.traffic.annual_volume);
            s.get("speed_kmh", cfg.traffic.speed_kmh);
            s.get("density_veh_per_km", cfg.traffic.density_veh_per_km);
            s.get("transfer_coefficient", cfg.coupling.transfer);
            s.get("alpha", cfg.coupling.alpha);
            s.get("beta", cfg.coupling.beta);
        }
        {
            Section s(tables["network"], "network", unknown);
            s.get("modeled_length_m", cfg.network.modeled_length_m);
            s.get("network_length_m", cfg.network.network_length_m);
        }
        {
            Section s(tables["mesh"], "mesh", unknown);
            std::string preset = cfg.mesh_preset_name;
            s.get("preset", preset);
            cfg.set_mesh_preset(preset);
            s.get_count("max_cells", cfg.mesh.max_cells);
            read_axis(s, "x", cfg.mesh.x);
            read_axis(s, "y", cfg.mesh.y);
            read_axis(s, "z", cfg.mesh.z);
            s.get("road_x_min", cfg.mesh.road.x_min);
            s.get("road_x_max", cfg.mesh.road.x_max);
            s.get("road_y_min", cfg.mesh.road.y_min);
            s.get("road_y_max", cfg.mesh.road.y_max);
            s.get("emission_height", cfg.mesh.road.emission_height);
        }
        {
            Section s(tables["fluid"], "fluid", unknown);
            s.get("density", cfg.fluid.density);
            s.get("viscosity", cfg.fluid.viscosity);
            s.get("temperature_c", cfg.fluid.temperature_c);
            const auto g = s.get_numbers("gravity");
            if (!g.empty()) {
                if (g.size() != 3) throw ConfigError("fluid.gravity: expected [gx, gy, gz]");
                cfg.fluid.gravity = {g[0], g[1], g[2]};
            }
        }
        {
            Section s(tables["turbulence"], "turbulence", unknown);
            auto& t = cfg.turbulence;
            s.get("c_mu", t.c_mu);
            s.get("c1_eps", t.c1_eps);
            s.get("c2_eps", t.c2_eps);
            s.get("sigma_k", t.sigma_k);
            s.get("sigma_eps", t.sigma_eps);
            s.get("kappa", t.kappa);
            std::string model = "k_epsilon";
            s.get("model", model);
            if (model == "k_epsilon") {
                cfg.solver.turbulence = TurbulenceModel::standard_k_epsilon;
            } else if (model == "laminar") {
                cfg.solver.turbulence = TurbulenceModel::laminar;
            } else {
                throw ConfigError("turbulence.model: expected 'k_epsilon' or 'laminar'");
            }
        }
        {
            Section s(tables["inlet"], "inlet", unknown);
            double uref = cfg.boundaries.inlet.reference_speed;
            double zref = cfg.boundaries.inlet.reference_height;
            double z0 = cfg.boundaries.inlet.roughness_length;
            s.get("reference_speed", uref);
            s.get("reference_height", zref);
            s.get("roughness_length", z0);
            cfg.boundaries.inlet = make_log_law_inlet(uref, zref, z0, cfg.turbulence.kappa);
            s.get_kind("outlet", cfg.boundaries.outlet);
            s.get_kind("lateral", cfg.boundaries.lateral);
            s.get_kind("top", cfg.boundaries.top);
        }
        {
            Section s(tables["solver"], "solver", unknown);
            auto& c = cfg.solver;
            s.get("relax_velocity", c.relax_velocity);
            s.get("relax_pressure", c.relax_pressure);
            s.get("relax_k", c.relax_k);
            s.get("relax_epsilon", c.relax_epsilon);
            s.get("tolerance", c.tolerance);
            s.get("max_iterations", c.max_iterations);
            s.get("k_floor", c.k_floor);
            s.get("epsilon_floor", c.epsilon_floor);
            s.get("inner_max_iterations", c.inner_max_iterations);
        }
        {
            Section s(tables["dispersion"], "dispersion", unknown);
            auto& d = cfg.dispersion;
            s.get("turbulent_schmidt", d.turbulent_schmidt);
            s.get("molecular_schmidt", d.molecular_schmidt);
            s.get("particle_density", d.particle_density);
            s.get("gravitational_settling", d.gravitational_settling);
            s.get("tolerance", d.tolerance);
            s.get("pm2_5_diameter_m", cfg.pollutants[PollutantId::PM2_5].particle_diameter);
            s.get("pm10_diameter_m", cfg.pollutants[PollutantId::PM10].particle_diameter);
        }
        {
            Section s(tables["dpm"], "dpm", unknown);
            auto& d = cfg.dpm;
            s.get("enabled", d.enabled);
            const auto names = s.get_strings("pollutants");
            if (s.node("pollutants")) {
                d.pollutants.clear();
                for (const auto& n : names) d.pollutants.push_back(parse_pollutant(n));
            }
            s.get_count("particles", d.config.particles);
            s.get("max_steps", d.config.max_steps);
            s.get("step_factor", d.config.step_factor);
            s.get("source_update_interval", d.config.source_update_interval);
            s.get("random_walk", d.config.random_walk);
            s.get("time_scale_constant", d.config.time_scale_constant);
            s.get("trap_on_ground", d.config.trap_on_ground);
            s.get_count("record_trajectories", d.config.record_trajectories);
        }
        {
            Section s(tables["capacity"], "capacity", unknown);
            s.get("monitor_distance_m", cfg.capacity_monitor.distance_m);
            s.get("monitor_height_m", cfg.capacity_monitor.height_m);
            s.get("background_fraction", cfg.background_fraction);
            if (const auto* ct = s.sub("constraints")) {
                Section cs(ct, "capacity.constraints", unknown);
                for (auto id : all_pollutants) {
                    const std::string key(pollutant_name(id));
                    const auto* n = cs.node(key);
                    if (!n) continue;
                    const auto* t = n->as_table();
                    if (!t) {
                        throw ConfigError(cs.where(key) + ": expected { value = ..., unit = \"mg/m3\" }");
                    }
                    Section vs(t, cs.where(key), unknown);
                    double value = -1.0;
                    std::string unit;
                    vs.get("value", value);
                    vs.get("unit", unit);
                    if (unit.empty()) {
                        throw ConfigError(cs.where(key) + ": missing unit tag");
                    }
                    cfg.constraints.set(id, value, parse_concentration_unit(unit));
                }
            }
        }
        {
            Section s(tables["monitors"], "monitors", unknown);
            const auto d = s.get_numbers("distances_m");
            double h = 2.0;
            s.get("height_m", h);
            if (s.node("distances_m") || s.node("height_m")) {
                cfg.monitors.clear();
                for (double x : (d.empty() ? std::vector<double>{30, 100, 200, 300, 400, 600} : d)) {
                    cfg.monitors.push_back({x, h});
                }
            }
        }
        {
            Section s(tables["run"], "run", unknown);
            s.get("deterministic", cfg.deterministic);
            std::int64_t seed = static_cast<std::int64_t>(cfg.seed);
            s.get("seed", seed);
            cfg.seed = static_cast<std::uint64_t>(seed);
            s.get_count("threads", cfg.threads);
            s.get("write_vtk", cfg.write_vtk);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) {
            list += (list.empty() ? "" : ", ") + k;
        }
        throw ConfigError("unknown configuration keys: " + list);
    }
    cfg.dpm.config.seed = cfg.seed;
    cfg.dpm.config.particle_density = cfg.dispersion.particle_density;
    cfg.dpm.config.threads = cfg.threads;
    cfg.solver.deterministic_reductions = cfg.deterministic;
    cfg.validate();
    if (check_files) {
        for (const auto& p : {cfg.files.fleet, cfg.files.emission_factors, cfg.files.field_measurements}) {
            if (!p.empty() && !std::filesystem::exists(p)) {
                throw IoError("configured file does not exist: " + p.string());
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    // Configs under configs/ name data files relative to the repository root.
    if (base.filename() == "configs") {
        base = base.parent_path();
    }
    return parse_config(ss.str(), base.empty() ? std::filesystem::path(".") : base);
}

namespace {

std::string num(double v)
{
    auto s = fmt::format("{}", v);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string quoted(const std::string& s)
{
    return fmt::format("\"{}\"", s);
}

} // namespace

std::string effective_config_dump(const RunConfig& c)
{
    std::string o;
    auto line = [&](const std::string& key, const std::string& value, const std::string& note = {}) {
        o += fmt::format("{} = {}{}\n", key, value, note.empty() ? "" : "  # " + note);
    };
    auto paper = [](const std::string& what) { return "paper: " + what; };

    o += "# Effective configuration (all defaults applied).\n\n[scenario]\n";
    line("name", quoted(c.scenario));

    o += "\n[files]\n";
    line("fleet", quoted(c.files.fleet.generic_string()));
    line("emission_factors", quoted(c.files.emission_factors.generic_string()));
    if (!c.files.field_measurements.empty()) {
        line("field_measurements", quoted(c.files.field_measurements.generic_string()));
    }

    o += "\n[traffic]\n";
    line("annual_volume", num(c.traffic.annual_volume), paper("current annual traffic of the section, 2661896 veh/yr"));
    line("speed_kmh", num(c.traffic.speed_kmh), paper("average speed 90 km/h"));
    line("density_veh_per_km", num(c.traffic.density_veh_per_km), "diagnostic only");
    line("transfer_coefficient", num(c.coupling.transfer), "default 1");
    line("alpha", num(c.coupling.alpha));
    line("beta", num(c.coupling.beta));

    o += "\n[network]\n";
    line("modeled_length_m", num(c.network.modeled_length_m), paper("300 m modeled stretch"));
    line("network_length_m", num(c.network.network_length_m), paper("118 km section length"));

    o += "\n[mesh]\n";
    std::string preset_note;
    if (c.mesh_preset_name == "paper") {
        preset_note = paper(fmt::format("grid size {} cells; this preset is excluded from CI", reference_study_cell_count));
    }
    line("preset", quoted(c.mesh_preset_name), preset_note);
    line("max_cells", std::to_string(c.mesh.max_cells));
    auto axis = [&](const std::string& p, const GradedAxis& a, const std::string& note) {
        line(p + "_extent", num(a.extent), note);
        line(p + "_min_spacing", num(a.min_spacing));
        line(p + "_max_spacing", num(a.max_spacing));
        line(p + "_growth_ratio", num(a.growth_ratio));
        line(p + "_refined_band", fmt::format("[{}, {}]", num(a.refined_band.lo), num(a.refined_band.hi)));
    };
    axis("x", c.mesh.x, paper("domain 1225.5 m x 300 m x 300 m"));
    axis("y", c.mesh.y, "");
    axis("z", c.mesh.z, "");
    line("road_x_min", num(c.mesh.road.x_min));
    line("road_x_max", num(c.mesh.road.x_max), paper("25.5 m road width"));
    line("road_y_min", num(c.mesh.road.y_min));
    line("road_y_max", num(c.mesh.road.y_max));
    line("emission_height", num(c.mesh.road.emission_height), paper("injection at 0.3 m"));

    o += "\n[fluid]\n";
    line("density", num(c.fluid.density));
    line("viscosity", num(c.fluid.viscosity));
    line("gravity", fmt::format("[{}, {}, {}]", num(c.fluid.gravity.x), num(c.fluid.gravity.y), num(c.fluid.gravity.z)),
         paper("gravity -9.8 N/kg"));
    line("temperature_c", num(c.fluid.temperature_c), paper("temperature 32 C; diagnostic"));

    o += "\n[turbulence]\n";
    line("model", quoted(c.solver.turbulence == TurbulenceModel::laminar ? "laminar" : "k_epsilon"),
         paper("standard k-epsilon"));
    line("c_mu", num(c.turbulence.c_mu));
    line("c1_eps", num(c.turbulence.c1_eps));
    line("c2_eps", num(c.turbulence.c2_eps));
    line("sigma_k", num(c.turbulence.sigma_k));
    line("sigma_eps", num(c.turbulence.sigma_eps));
    line("kappa", num(c.turbulence.kappa));

    o += "\n[inlet]\n";
    line("reference_speed", num(c.boundaries.inlet.reference_speed), paper("input wind velocity 3.4 m/s"));
    line("reference_height", num(c.boundaries.inlet.reference_height));
    line("roughness_length", num(c.boundaries.inlet.roughness_length));
    line("outlet", quoted(kind_name(c.boundaries.outlet)), paper("pressure-outlet"));
    line("lateral", quoted(kind_name(c.boundaries.lateral)));
    line("top", quoted(kind_name(c.boundaries.top)));

    o += "\n[solver]\n";
    line("relax_velocity", num(c.solver.relax_velocity));
    line("relax_pressure", num(c.solver.relax_pressure));
    line("relax_k", num(c.solver.relax_k));
    line("relax_epsilon", num(c.solver.relax_epsilon));
    line("tolerance", num(c.solver.tolerance), paper("all residuals 1e-5"));
    line("max_iterations", std::to_string(c.solver.max_iterations));
    line("k_floor", num(c.solver.k_floor));
    line("epsilon_floor", num(c.solver.epsilon_floor));
    line("inner_max_iterations", std::to_string(c.solver.inner_max_iterations));

    o += "\n[dispersion]\n";
    line("turbulent_schmidt", num(c.dispersion.turbulent_schmidt));
    line("molecular_schmidt", num(c.dispersion.molecular_schmidt));
    line("particle_density", num(c.dispersion.particle_density));
    line("gravitational_settling", c.dispersion.gravitational_settling ? "true" : "false");
    line("tolerance", num(c.dispersion.tolerance));
    line("pm2_5_diameter_m", num(c.pollutants[PollutantId::PM2_5].particle_diameter), paper("PM2.5 diameter 2.5e-6 m"));
    line("pm10_diameter_m", num(c.pollutants[PollutantId::PM10].particle_diameter),
         paper("PM10 diameter 1.0e-6 m as printed; 1.0e-5 m is conventional"));

    o += "\n[dpm]\n";
    line("enabled", c.dpm.enabled ? "true" : "false");
    std::string names;
    for (auto id : c.dpm.pollutants) {
        names += (names.empty() ? "" : ", ") + quoted(std::string(pollutant_name(id)));
    }
    line("pollutants", "[" + names + "]");
    line("particles", std::to_string(c.dpm.config.particles));
    line("max_steps", std::to_string(c.dpm.config.max_steps), paper("maximum 50,000 tracking steps"));
    line("step_factor", num(c.dpm.config.step_factor), paper("step factor 5"));
    line("source_update_interval", std::to_string(c.dpm.config.source_update_interval),
         paper("interval of 10 iterations"));
    line("random_walk", c.dpm.config.random_walk ? "true" : "false");
    line("time_scale_constant", num(c.dpm.config.time_scale_constant));
    line("trap_on_ground", c.dpm.config.trap_on_ground ? "true" : "false");
    line("record_trajectories", std::to_string(c.dpm.config.record_trajectories));

    o += "\n[capacity]\n";
    line("monitor_distance_m", num(c.capacity_monitor.distance_m), paper("600 m comparison point"));
    line("monitor_height_m", num(c.capacity_monitor.height_m), paper("Z = 2 m"));
    line("background_fraction", num(c.background_fraction), paper("background 70% of the primary standard"));
    o += "\n[capacity.constraints]\n";
    for (auto id : all_pollutants) {
        const auto unit = c.constraints.input_unit[id];
        line(quoted(std::string(pollutant_name(id))),
             fmt::format("{{ value = {}, unit = {} }}", num(from_internal(c.constraints.ceiling[id], unit)),
                         quoted(std::string(unit_label(unit)))),
             paper("24 h Class I limit"));
    }

    o += "\n[monitors]\n";
    std::string dists;
    for (const auto& m : c.monitors) {
        dists += (dists.empty() ? "" : ", ") + num(m.distance_m);
    }
    line("distances_m", "[" + dists + "]", paper("sampling sites 30, 100, 200, 300, 400, 600 m"));
    line("height_m", num(c.monitors.front().height_m));

    o += "\n[run]\n";
    line("deterministic", c.deterministic ? "true" : "false");
    line("seed", std::to_string(c.seed));
    line("threads", std::to_string(c.threads), "0 = ROADCAP_THREADS or hardware default");
    line("write_vtk", c.write_vtk ? "true" : "false");
    return o;
}

} // namespace roadcap
