#include "sldp/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sldp/audit.hpp"
#include "sldp/ldp.hpp"
#include "sldp/models.hpp"
#include "sldp/noise.hpp"
#include "sldp/path.hpp"
#include "sldp/rng.hpp"
#include "sldp/stepper.hpp"

namespace fs = std::filesystem;

namespace sldp {

namespace {

struct RunLock {
    fs::path lock_path;
    explicit RunLock(const fs::path& dir) : lock_path(dir / "run.lock") {
        if (fs::exists(lock_path))
            throw std::runtime_error("output directory is locked by another run: " + lock_path.string());
        std::ofstream lock(lock_path);
        lock << "locked\n";
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(lock_path, ec);
    }
};

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + file.string());
    os << text;
}

std::string read_text(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ModelBuildConfig model_config(const Config& cfg) {
    ModelBuildConfig mc;
    mc.id = cfg.get_string("model", "id", "heat");
    mc.n_dof = cfg.get_size("grid", "n_dof", 64);
    mc.p = cfg.get_double("model", "p", 4.0);
    mc.p_tilde = cfg.get_double("model", "p_tilde", 2.0);
    mc.c = cfg.get_double("model", "c", 1.0);
    mc.r = cfg.get_double("model", "r", 3.0);
    mc.s = cfg.get_double("model", "s", 2.0);
    mc.c1 = cfg.get_double("model", "c1", 1.0);
    mc.c2 = cfg.get_double("model", "c2", 1.0);
    mc.b = cfg.get_double("model", "b", 1.0);
    if (cfg.has("model", "sigmas")) mc.sigmas = cfg.get_list("model", "sigmas", {});
    mc.noise_kind = cfg.get_string("noise", "kind", "additive");
    mc.noise_m = cfg.get_size("noise", "m", 16);
    mc.noise_amplitude = cfg.get_double("noise", "amplitude", 1.0);
    return mc;
}

StepperConfig stepper_config(const Config& cfg) {
    StepperConfig sc;
    sc.dt = cfg.get_double("grid", "dt", 1e-3);
    sc.solver_tol = cfg.get_double("grid", "solver_tol", 1e-10);
    sc.max_iters = static_cast<int>(cfg.get_size("grid", "max_iters", 60));
    sc.max_dt_halvings = static_cast<int>(cfg.get_size("grid", "max_dt_halvings", 0));
    sc.energy_check = cfg.get_bool("grid", "energy_check", true);
    return sc;
}

Vec initial_state(const Config& cfg, const ModelSpec& model) {
    const bool euclid = model.space->is_euclidean();
    const std::string kind = cfg.get_string("initial", "kind", euclid ? "zero" : "sine");
    if (kind == "zero") return Vec(model.space->dim(), 0.0);
    if (kind == "coords") {
        Vec v = cfg.get_list("initial", "values", {});
        if (v.size() != model.space->dim())
            throw ConfigError("[initial] values: expected " + std::to_string(model.space->dim()) + " entries");
        return v;
    }
    if (kind == "sine") {
        if (euclid) throw ConfigError("[initial] kind = sine needs a PDE model");
        const double scale = cfg.get_double("initial", "scale", 1.0);
        constexpr double kPi = 3.14159265358979323846264338327950288;
        return model.space->interpolate([scale, kPi](double x) { return scale * std::sin(kPi * x); });
    }
    throw ConfigError("[initial] kind must be zero | sine | coords");
}

TailStatistic statistic_config(const Config& cfg) {
    const std::string kind = cfg.get_string("statistic", "kind", "equiv_sup_distance");
    const double p_exp = cfg.get_double("statistic", "p_exponent", 2.0);
    if (kind == "equiv_sup_distance") return TailStatistic::equiv_sup_distance(cfg.get_double("statistic", "delta", 1.0));
    if (kind == "energy_ball_exit")
        return TailStatistic::energy_ball_exit(cfg.get_double("statistic", "M", 1.0), p_exp);
    if (kind == "sup_displacement")
        return TailStatistic::sup_displacement(cfg.get_double("statistic", "delta", 1.0));
    throw ConfigError("[statistic] kind must be equiv_sup_distance | energy_ball_exit | sup_displacement");
}

}  // namespace

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["kind"] = kind;
    j["wall_time_seconds"] = wall_time_seconds;
    j["master_seed"] = master_seed;
    j["level_seeds"] = level_seeds;
    j["outputs"] = outputs;
    j["seed_rule"] = seed_rule_string();
    j["canonical_config"] = canonical_config;
    return j.dump(2);
}

RunManifest RunManifest::from_json_file(const std::string& filename) {
    const auto j = nlohmann::json::parse(read_text(filename));
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.kind = j.at("kind").get<std::string>();
    m.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.level_seeds = j.at("level_seeds").get<std::vector<std::uint64_t>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.canonical_config = j.at("canonical_config").get<std::string>();
    return m;
}

RunManifest run_experiment(const Config& cfg, const std::string& output_dir_override) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string kind = cfg.get_string("", "kind", "simulate");
    const std::string dir_name =
        output_dir_override.empty() ? cfg.get_string("output", "dir", "run_output") : output_dir_override;
    if (!output_dir_override.empty()) cfg.get_string("output", "dir", "run_output");  // consume if present

    RunManifest manifest;
    manifest.config_hash = cfg.hash_hex();
    manifest.tool_version = kToolVersion;
    manifest.kind = kind;
    manifest.canonical_config = cfg.canonical();

    const fs::path dir(dir_name);
    fs::create_directories(dir);
    RunLock lock(dir);

    const ModelBuildConfig mc = model_config(cfg);
    const ModelSpec model = build_model(mc);
    const StepperConfig sc = stepper_config(cfg);
    const double horizon = cfg.get_double("grid", "horizon", 1.0);
    const std::uint64_t master_seed = cfg.get_u64("ensemble", "master_seed", 1);
    const std::size_t n_paths = cfg.get_size("ensemble", "n_paths", 1000);
    manifest.master_seed = master_seed;

    if (kind == "audit") {
        SamplerSpec sampler;
        sampler.n_modes = cfg.get_size("audit", "modes", 8);
        sampler.scale_min = cfg.get_double("audit", "scale_min", 0.2);
        sampler.scale_max = cfg.get_double("audit", "scale_max", 2.0);
        sampler.time_horizon = cfg.get_double("audit", "horizon", 1.0);
        const std::size_t n = cfg.get_size("audit", "n", 10000);
        const std::uint64_t seed = cfg.get_u64("audit", "seed", master_seed);
        cfg.require_all_consumed();
        const AssumptionReport report = audit_assumptions(model, sampler, n, seed);
        write_text(dir / "audit.json", report.to_json());
        manifest.outputs = {"audit.json"};
        manifest.level_seeds = {seed};
    } else if (kind == "simulate") {
        const double epsilon = cfg.get_double("grid", "epsilon", 1.0);
        const std::string mode_str = cfg.get_string("grid", "mode", "full");
        const Vec x0 = initial_state(cfg, model);
        cfg.require_all_consumed();
        const auto n_steps = static_cast<std::size_t>(std::llround(horizon / sc.dt));
        NoiseStream stream;
        if (!model.diffusion.is_zero()) stream = sample_stream(model.diffusion.m(), sc.dt, n_steps, master_seed);
        const Path p = simulate(model, x0, epsilon, horizon, sc, stream, sim_mode_from_string(mode_str));
        write_path_binary_file(p, (dir / "path.bin").string());
        write_path_csv_file(p, (dir / "path.csv").string());
        manifest.outputs = {"path.bin", "path.csv"};
        manifest.level_seeds = {master_seed};
    } else if (kind == "tail") {
        TailExperiment exp;
        exp.statistic = statistic_config(cfg);
        exp.epsilon = cfg.get_double("grid", "epsilon", 0.1);
        exp.n_paths = n_paths;
        exp.x0 = initial_state(cfg, model);
        exp.horizon = horizon;
        exp.cfg = sc;
        cfg.require_all_consumed();
        const TailEstimate est = estimate_tail(model, exp, master_seed);
        write_text(dir / "tail.json", est.to_json());
        manifest.outputs = {"tail.json"};
        manifest.level_seeds = {master_seed};
    } else if (kind == "equiv-curve") {
        const std::vector<double> eps_list =
            cfg.get_list("epsilons", "list", {0.5, 0.25, 0.125, 0.0625, 0.03125});
        const double delta =
            cfg.has("statistic", "delta") ? cfg.get_double("statistic", "delta", 1.0)
                                          : std::numeric_limits<double>::quiet_NaN();
        const double quantile = cfg.get_double("statistic", "calibration_quantile", 0.10);
        const Vec x0 = initial_state(cfg, model);
        cfg.require_all_consumed();
        const EquivCurve curve =
            equiv_curve(model, delta, eps_list, n_paths, x0, horizon, sc, master_seed, quantile);
        write_text(dir / "equiv.json", curve.to_json());
        write_text(dir / "equiv.csv", curve.to_csv());
        manifest.outputs = {"equiv.json", "equiv.csv"};
        for (const auto& p : curve.points)
            manifest.level_seeds.push_back(p.failed ? 0 : p.estimate.master_seed);
    } else if (kind == "exit-curve") {
        std::vector<double> thresholds;
        if (cfg.has("thresholds", "list")) thresholds = cfg.get_list("thresholds", "list", {});
        const double epsilon = cfg.get_double("grid", "epsilon", 0.1);
        const double p_exp = cfg.get_double("statistic", "p_exponent", 2.0);
        const Vec x0 = initial_state(cfg, model);
        cfg.require_all_consumed();
        const ExitCurve curve = exit_curve(model, thresholds, epsilon, p_exp, n_paths, x0, horizon, sc, master_seed);
        write_text(dir / "exit.json", curve.to_json());
        write_text(dir / "exit.csv", curve.to_csv());
        manifest.outputs = {"exit.json", "exit.csv"};
        if (!curve.points.empty()) manifest.level_seeds = {curve.points.front().master_seed};
    } else if (kind == "rate") {
        RateTarget target;
        target.y = cfg.get_list("rate", "target", {1.0});
        target.match_tol = cfg.get_double("rate", "match_tol", 1e-6);
        RateOptConfig opt;
        opt.n_intervals = cfg.get_size("rate", "n_intervals", 16);
        opt.max_iters = static_cast<int>(cfg.get_size("rate", "max_iters", 400));
        opt.restarts = static_cast<int>(cfg.get_size("rate", "restarts", 1));
        opt.lambda0 = cfg.get_double("rate", "lambda0", 1.0);
        opt.lambda_factor = cfg.get_double("rate", "lambda_factor", 10.0);
        opt.lambda_max = cfg.get_double("rate", "lambda_max", 1e8);
        const Vec x0 = initial_state(cfg, model);
        cfg.require_all_consumed();
        if (target.y.size() != model.space->dim())
            throw ConfigError("[rate] target: expected " + std::to_string(model.space->dim()) + " entries");
        const RateEstimate est = estimate_rate(model, x0, target, horizon, opt, master_seed);
        write_text(dir / "rate.json", est.to_json());
        manifest.outputs = {"rate.json"};
        manifest.level_seeds = {master_seed};
    } else {
        throw ConfigError("kind must be audit | simulate | tail | equiv-curve | exit-curve | rate");
    }

    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest.to_json());
    return manifest;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string report_run(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const fs::path manifest_file = dir / "manifest.json";
    if (!fs::exists(manifest_file)) throw std::runtime_error("no manifest.json in " + run_dir);
    const RunManifest manifest = RunManifest::from_json_file(manifest_file.string());

    std::ostringstream out;
    out << "run " << run_dir << "  kind=" << manifest.kind << "  config=" << manifest.config_hash
        << "  seed=" << manifest.master_seed << "\n";

    std::string report_csv;
    if (manifest.kind == "equiv-curve") {
        const auto j = nlohmann::json::parse(read_text(dir / "equiv.json"));
        out << "  delta=" << fmt(j.at("delta").get<double>())
            << (j.at("delta_calibrated").get<bool>() ? " (self-calibrated)" : "")
            << "  tail_decreases=" << j.at("tail_decreases").get<int>() << "\n";
        out << "  epsilon      log_scaled     ci_95                 bound\n";
        for (const auto& p : j.at("points")) {
            if (p.at("failed").get<bool>()) {
                out << "  " << fmt(p.at("epsilon").get<double>()) << "  FAILED: " << p.at("error").get<std::string>()
                    << "\n";
                continue;
            }
            const auto& e = p.at("estimate");
            out << "  " << fmt(p.at("epsilon").get<double>()) << "   " << fmt(e.at("log_scaled").get<double>())
                << "   [" << fmt(e.at("ci_95").at("lo").get<double>()) << ", "
                << fmt(e.at("ci_95").at("hi").get<double>()) << "]   "
                << (e.at("is_bound").get<bool>() ? "yes" : "no") << "\n";
        }
        report_csv = read_text(dir / "equiv.csv");
    } else if (manifest.kind == "exit-curve") {
        const auto j = nlohmann::json::parse(read_text(dir / "exit.json"));
        out << "  epsilon=" << fmt(j.at("epsilon").get<double>()) << "  p=" << fmt(j.at("p_exponent").get<double>())
            << "\n";
        out << "  M            p_hat         log_scaled    bound\n";
        for (const auto& e : j.at("points"))
            out << "  " << fmt(e.at("threshold").get<double>()) << "   " << fmt(e.at("p_hat").get<double>())
                << "   " << fmt(e.at("log_scaled").get<double>()) << "   "
                << (e.at("is_bound").get<bool>() ? "yes" : "no") << "\n";
        report_csv = read_text(dir / "exit.csv");
    } else if (manifest.kind == "audit") {
        const auto j = nlohmann::json::parse(read_text(dir / "audit.json"));
        out << "  model=" << j.at("model_id").get<std::string>() << "  n=" << j.at("n_samples").get<std::size_t>()
            << "  passed=" << (j.at("passed").get<bool>() ? "yes" : "NO") << "\n";
        out << "  condition                 violations   fitted        worst_margin\n";
        report_csv = "condition,n_violations,fitted_constant,worst_margin\n";
        for (const auto& c : j.at("conditions")) {
            const auto id = c.at("condition_id").get<std::string>();
            out << "  " << id << std::string(id.size() < 26 ? 26 - id.size() : 1, ' ')
                << c.at("n_violations").get<std::size_t>() << "        " << fmt(c.at("fitted_constant").get<double>())
                << "      " << fmt(c.at("worst_margin").get<double>()) << "\n";
            report_csv += id + "," + std::to_string(c.at("n_violations").get<std::size_t>()) + "," +
                          fmt(c.at("fitted_constant").get<double>()) + "," + fmt(c.at("worst_margin").get<double>()) +
                          "\n";
        }
    } else if (manifest.kind == "tail") {
        const auto j = nlohmann::json::parse(read_text(dir / "tail.json"));
        out << "  statistic=" << j.at("statistic").get<std::string>() << "  epsilon="
            << fmt(j.at("epsilon").get<double>()) << "  p_hat=" << fmt(j.at("p_hat").get<double>())
            << "  log_scaled=" << fmt(j.at("log_scaled").get<double>())
            << (j.at("is_bound").get<bool>() ? " (bound)" : "") << "\n";
        report_csv = "epsilon,p_hat,log_scaled,is_bound\n" + fmt(j.at("epsilon").get<double>()) + "," +
                     fmt(j.at("p_hat").get<double>()) + "," + fmt(j.at("log_scaled").get<double>()) + "," +
                     (j.at("is_bound").get<bool>() ? "1" : "0") + "\n";
    } else if (manifest.kind == "rate") {
        const auto j = nlohmann::json::parse(read_text(dir / "rate.json"));
        out << "  i_value=" << fmt(j.at("i_value").get<double>()) << "  terminal_gap="
            << fmt(j.at("terminal_gap").get<double>()) << "  converged="
            << (j.at("converged").get<bool>() ? "yes" : "NO") << "  note=" << j.at("note").get<std::string>() << "\n";
        report_csv = "i_value,terminal_gap,converged\n" + fmt(j.at("i_value").get<double>()) + "," +
                     fmt(j.at("terminal_gap").get<double>()) + "," + (j.at("converged").get<bool>() ? "1" : "0") +
                     "\n";
    } else if (manifest.kind == "simulate") {
        out << "  outputs: path.bin, path.csv\n";
        report_csv = "";
    }

    if (!report_csv.empty()) write_text(dir / "report.csv", report_csv);
    return out.str();
}

}  // namespace sldp
