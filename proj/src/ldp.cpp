#include "sldp/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "sldp/framework.hpp"
#include "sldp/parallel.hpp"
#include "sldp/rng.hpp"

namespace sldp {

namespace {

constexpr double kQNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Seed derivation tags; logged through seed_rule strings.
constexpr std::uint64_t kEquivPilotTag = 0xA11CE;
constexpr std::uint64_t kEquivLevelTag = 0xB000;
constexpr std::uint64_t kExitEnsembleTag = 0xE817;

nlohmann::ordered_json ci_json(const BinomialCI& ci) {
    nlohmann::ordered_json j;
    j["lo"] = ci.lo;
    j["hi"] = ci.hi;
    return j;
}

std::string noise_basis_of(const ModelSpec& model) {
    return model.space->is_euclidean() ? "coordinate" : "dirichlet_sine";
}

}  // namespace

ControlPath ControlPath::zero(double horizon, std::size_t n_intervals, std::size_t m) {
    if (n_intervals < 1 || !(horizon > 0.0)) throw std::invalid_argument("ControlPath::zero: bad grid");
    ControlPath c;
    c.times.resize(n_intervals + 1);
    for (std::size_t k = 0; k <= n_intervals; ++k)
        c.times[k] = horizon * static_cast<double>(k) / static_cast<double>(n_intervals);
    c.hdot.assign(n_intervals, Vec(m, 0.0));
    return c;
}

void ControlPath::validate() const {
    if (times.size() < 2 || times[0] != 0.0) throw std::invalid_argument("ControlPath: grid must start at 0");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("ControlPath: times must increase");
    if (hdot.size() != times.size() - 1) throw std::invalid_argument("ControlPath: one hdot per interval required");
    const std::size_t mm = m();
    for (const auto& u : hdot) {
        if (u.size() != mm) throw std::invalid_argument("ControlPath: inconsistent hdot dimension");
        if (!all_finite(u)) throw std::invalid_argument("ControlPath: non-finite control");
    }
}

const Vec& ControlPath::hdot_on_interval_containing(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t idx = static_cast<std::size_t>(std::distance(times.begin(), it));
    if (idx == 0) idx = 1;
    idx = std::min(idx - 1, hdot.size() - 1);
    return hdot[idx];
}

double energy(const ControlPath& control) {
    control.validate();
    double e = 0.0;
    for (std::size_t k = 0; k < control.hdot.size(); ++k) {
        const double dt = control.times[k + 1] - control.times[k];
        e += 0.5 * dt * dot(control.hdot[k], control.hdot[k]);
    }
    return e;
}

namespace {

// One implicit-midpoint skeleton step g -> g + dt B((g + g')/2) u, exact for
// the affine diffusions implemented here.
void skeleton_step(const DiffusionSpec& diffusion, const Vec& u, double dt, Vec& g) {
    if (diffusion.is_zero()) return;
    if (diffusion.kind() == DiffusionSpec::Kind::AdditiveTraceClass) {
        for (std::size_t j = 0; j < diffusion.m(); ++j) {
            if (u[j] == 0.0) continue;
            const Vec& col = diffusion.column(g, j);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += dt * u[j] * col[i];
        }
        return;
    }
    // Linear multiplicative: columns are w_j . g, so the midpoint relation is
    // diagonal: (1 - dt/2 d_i) g'_i = (1 + dt/2 d_i) g_i with d = sum u_j w_j.
    const std::size_t n = g.size();
    Vec d(n, 0.0);
    for (std::size_t j = 0; j < diffusion.m(); ++j) {
        if (u[j] == 0.0) continue;
        const Vec wcol = diffusion.column(Vec(n, 1.0), j);  // nodal weights
        for (std::size_t i = 0; i < n; ++i) d[i] += u[j] * wcol[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 0.5 * dt * d[i];
        const double denom = 1.0 - z;
        if (std::abs(denom) < 1e-12) throw std::runtime_error("skeleton_solve: midpoint step singular");
        g[i] = (1.0 + z) * g[i] / denom;
    }
}

}  // namespace

Path skeleton_solve(const ModelSpec& model, const Vec& x0, const ControlPath& control, double horizon,
                    const StepperConfig& cfg) {
    control.validate();
    cfg.validate(horizon);
    if (x0.size() != model.space->dim()) throw std::invalid_argument("skeleton_solve: x0 dimension mismatch");
    if (!model.diffusion.is_zero() && control.m() != model.diffusion.m())
        throw std::invalid_argument("skeleton_solve: control dimension does not match the noise truncation");
    if (std::abs(control.times.back() - horizon) > 1e-9 * std::max(1.0, horizon))
        throw std::invalid_argument("skeleton_solve: control grid must span the horizon");
    const double n_real = horizon / cfg.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(n_real));
    if (n_steps < 1 || std::abs(n_real - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, n_real))
        throw std::invalid_argument("skeleton_solve: horizon must be an integer multiple of dt");
    for (double tk : control.times) {
        const double ratio = tk / cfg.dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
            throw std::invalid_argument("skeleton_solve: control grid must be a coarsening of the simulation grid");
    }

    Path p;
    p.meta = PathMeta{1.0, cfg.dt, 0, model.model_id, SimMode::Skeleton};
    Vec g = x0;
    p.times.push_back(0.0);
    p.states.push_back(g);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t_mid = (static_cast<double>(k) + 0.5) * cfg.dt;
        const Vec& u = control.hdot_on_interval_containing(t_mid);
        skeleton_step(model.diffusion, u, cfg.dt, g);
        if (!all_finite(g)) throw std::runtime_error("skeleton_solve: non-finite state");
        p.times.push_back(static_cast<double>(k + 1) * cfg.dt);
        p.states.push_back(g);
    }
    return p;
}

double sup_h_distance(const Path& a, const Path& b, const GalerkinSpace& space) {
    if (a.times.size() != b.times.size()) throw std::invalid_argument("sup_h_distance: grid mismatch");
    for (std::size_t k = 0; k < a.times.size(); ++k)
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
            throw std::invalid_argument("sup_h_distance: grid mismatch");
    double sup2 = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double d = space.h_norm(sub(a.states[k], b.states[k]));
        sup2 = std::max(sup2, d * d);
    }
    return sup2;
}

double hv_energy(const Path& path, double epsilon, double p_exponent, const ModelSpec& model) {
    if (p_exponent < 2.0) throw std::invalid_argument("hv_energy: p must be >= 2");
    if (path.meta.mode != SimMode::Full) throw std::invalid_argument("hv_energy: path must be a mode-full trajectory");
    if (std::abs(path.meta.epsilon - epsilon) > 1e-12 * std::max(1.0, epsilon))
        throw std::invalid_argument("hv_energy: epsilon does not match the path");
    const double alpha = model.assumptions.alpha;
    double sup_p = 0.0;
    double integral = 0.0;
    double prev_integrand = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const double hn = model.space->h_norm(path.states[k]);
        const double vn = model.space->v_norm(path.states[k]);
        sup_p = std::max(sup_p, std::pow(hn, p_exponent));
        const double weight = (p_exponent == 2.0) ? 1.0 : std::pow(hn, p_exponent - 2.0);
        const double integrand = weight * std::pow(vn, alpha);
        if (k > 0) integral += 0.5 * (prev_integrand + integrand) * (path.times[k] - path.times[k - 1]);
        prev_integrand = integrand;
    }
    return sup_p + epsilon * integral;
}

std::string TailStatistic::kind_string() const {
    switch (kind) {
        case Kind::EquivSupDistance:
            return "equiv_sup_distance";
        case Kind::EnergyBallExit:
            return "energy_ball_exit";
        case Kind::SupDisplacement:
            return "sup_displacement";
    }
    return "?";
}

namespace {

StatisticSample one_path_statistic(const ModelSpec& model, const TailExperiment& exp, std::uint64_t path_seed) {
    StatisticSample out;
    const GalerkinSpace& space = *model.space;
    const double n_real = exp.horizon / exp.cfg.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(n_real));
    NoiseStream stream;
    if (!model.diffusion.is_zero())
        stream = sample_stream(model.diffusion.m(), exp.cfg.dt, n_steps, path_seed);

    try {
        switch (exp.statistic.kind) {
            case TailStatistic::Kind::SupDisplacement: {
                double sup2 = 0.0;
                Vec diff(space.dim());
                simulate_walk(model, exp.x0, exp.epsilon, exp.horizon, exp.cfg, stream, SimMode::ZeroDrift,
                              [&](std::size_t, double, const Vec& s) {
                                  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s[i] - exp.x0[i];
                                  const double d2 = space.h_inner(diff, diff);
                                  if (d2 > sup2) sup2 = d2;
                              });
                out.value = sup2;
                return out;
            }
            case TailStatistic::Kind::EnergyBallExit: {
                const double p = exp.statistic.p_exponent;
                const double alpha = model.assumptions.alpha;
                double sup_p = 0.0, integral = 0.0, prev = 0.0;
                simulate_walk(model, exp.x0, exp.epsilon, exp.horizon, exp.cfg, stream, SimMode::Full,
                              [&](std::size_t k, double, const Vec& s) {
                                  const double hn = space.h_norm(s);
                                  const double vn = space.v_norm(s);
                                  sup_p = std::max(sup_p, std::pow(hn, p));
                                  const double w = (p == 2.0) ? 1.0 : std::pow(hn, p - 2.0);
                                  const double integrand = w * std::pow(vn, alpha);
                                  if (k > 0) integral += 0.5 * (prev + integrand) * exp.cfg.dt;
                                  prev = integrand;
                              });
                out.value = sup_p + exp.epsilon * integral;
                return out;
            }
            case TailStatistic::Kind::EquivSupDistance: {
                // X (mode full) and Y (zero drift) share the stream; Y evolves
                // inside the X walk so the coupling is lockstep.
                const double sqrt_eps = std::sqrt(exp.epsilon);
                Vec y = exp.x0;
                Vec wy(space.dim(), 0.0);
                Vec diff(space.dim());
                double sup2 = 0.0;
                simulate_walk(model, exp.x0, exp.epsilon, exp.horizon, exp.cfg, stream, SimMode::Full,
                              [&](std::size_t k, double, const Vec& x) {
                                  if (k > 0 && !model.diffusion.is_zero()) {
                                      model.diffusion.apply_into(y, stream.row(k - 1), sqrt_eps, wy);
                                      for (std::size_t i = 0; i < y.size(); ++i) y[i] += wy[i];
                                      const double hy = space.h_norm(y);
                                      if (!std::isfinite(hy) || hy > kBlowUpThreshold)
                                          throw BlowUpError(k, hy, y);
                                  }
                                  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x[i] - y[i];
                                  const double d2 = space.h_inner(diff, diff);
                                  if (d2 > sup2) sup2 = d2;
                              });
                out.value = sup2;
                return out;
            }
        }
    } catch (const BlowUpError&) {
        out.blew_up = true;
        out.value = (exp.statistic.kind == TailStatistic::Kind::EnergyBallExit) ? kInf : kQNaN;
        return out;
    } catch (const std::exception&) {
        out.failed = true;
        out.value = kQNaN;
        return out;
    }
    out.failed = true;
    out.value = kQNaN;
    return out;
}

}  // namespace

std::vector<StatisticSample> sample_statistics(const ModelSpec& model, const TailExperiment& experiment,
                                               std::uint64_t master_seed) {
    if (experiment.n_paths < 1) throw std::invalid_argument("sample_statistics: n_paths must be >= 1");
    if (experiment.x0.size() != model.space->dim())
        throw std::invalid_argument("sample_statistics: x0 dimension mismatch");
    experiment.cfg.validate(experiment.horizon);
    std::vector<StatisticSample> values(experiment.n_paths);
    parallel_for(experiment.n_paths,
                 [&](std::size_t i) { values[i] = one_path_statistic(model, experiment, derive_seed(master_seed, i)); });
    return values;
}

TailEstimate estimate_tail_from_samples(const ModelSpec& model, const TailExperiment& exp,
                                        const std::vector<StatisticSample>& values, std::uint64_t master_seed) {
    TailEstimate est;
    est.model_id = model.model_id;
    est.statistic = exp.statistic.kind_string();
    est.epsilon = exp.epsilon;
    est.threshold = exp.statistic.threshold;
    est.p_exponent = exp.statistic.p_exponent;
    est.n_paths = values.size();
    est.master_seed = master_seed;
    est.seed_rule = seed_rule_string();
    est.noise_basis = noise_basis_of(model);
    for (const auto& s : values) {
        if (s.blew_up) ++est.n_blowups;
        if (s.failed) ++est.n_failures;
        if (s.value > exp.statistic.threshold) ++est.n_hits;
    }
    est.p_hat = static_cast<double>(est.n_hits) / static_cast<double>(est.n_paths);
    est.ci = clopper_pearson(est.n_hits, est.n_paths);
    if (est.n_hits == 0) {
        est.is_bound = true;
        est.log_scaled = exp.epsilon * std::log(zero_hit_upper_bound(est.n_paths, 0.05));
    } else {
        est.log_scaled = exp.epsilon * std::log(est.p_hat);
    }
    return est;
}

TailEstimate estimate_tail(const ModelSpec& model, const TailExperiment& experiment, std::uint64_t master_seed) {
    const auto values = sample_statistics(model, experiment, master_seed);
    return estimate_tail_from_samples(model, experiment, values, master_seed);
}

std::string TailEstimate::to_json() const {
    nlohmann::ordered_json j;
    j["model_id"] = model_id;
    j["statistic"] = statistic;
    j["epsilon"] = epsilon;
    j["threshold"] = threshold;
    j["p_exponent"] = p_exponent;
    j["n_paths"] = n_paths;
    j["n_hits"] = n_hits;
    j["n_blowups"] = n_blowups;
    j["n_failures"] = n_failures;
    j["p_hat"] = p_hat;
    j["log_scaled"] = log_scaled;
    j["is_bound"] = is_bound;
    j["ci_95"] = ci_json(ci);
    j["master_seed"] = master_seed;
    j["seed_rule"] = seed_rule;
    j["noise_basis"] = noise_basis;
    return j.dump(2);
}

EquivCurve equiv_curve(const ModelSpec& model, double delta, const std::vector<double>& epsilon_list,
                       std::size_t n_paths, const Vec& x0, double horizon, const StepperConfig& cfg,
                       std::uint64_t master_seed, double calibration_quantile) {
    if (epsilon_list.empty()) throw std::invalid_argument("equiv_curve: empty epsilon list");
    for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
        if (!(epsilon_list[i] > 0.0 && epsilon_list[i] <= 1.0))
            throw std::invalid_argument("equiv_curve: epsilon must lie in (0, 1]");
        if (i > 0 && !(epsilon_list[i] < epsilon_list[i - 1]))
            throw std::invalid_argument("equiv_curve: epsilon list must be strictly decreasing");
    }

    EquivCurve curve;
    curve.calibration_quantile = calibration_quantile;

    if (std::isnan(delta)) {
        // Pilot ensemble at the largest epsilon fixes delta at the stated
        // quantile of the statistic.
        TailExperiment pilot;
        pilot.statistic = TailStatistic::equiv_sup_distance(kInf);
        pilot.epsilon = epsilon_list.front();
        pilot.n_paths = std::min<std::size_t>(n_paths, 2000);
        pilot.x0 = x0;
        pilot.horizon = horizon;
        pilot.cfg = cfg;
        const auto samples = sample_statistics(model, pilot, derive_seed(master_seed, kEquivPilotTag));
        std::vector<double> finite;
        finite.reserve(samples.size());
        for (const auto& s : samples)
            if (std::isfinite(s.value)) finite.push_back(s.value);
        if (finite.empty()) throw std::runtime_error("equiv_curve: calibration pilot produced no finite statistics");
        curve.delta = sample_quantile(std::move(finite), calibration_quantile);
        curve.delta_calibrated = true;
        curve.pilot_paths = pilot.n_paths;
    } else {
        curve.delta = delta;
    }

    for (std::size_t level = 0; level < epsilon_list.size(); ++level) {
        EquivCurvePoint point;
        point.epsilon = epsilon_list[level];
        TailExperiment exp;
        exp.statistic = TailStatistic::equiv_sup_distance(curve.delta);
        exp.epsilon = epsilon_list[level];
        exp.n_paths = n_paths;
        exp.x0 = x0;
        exp.horizon = horizon;
        exp.cfg = cfg;
        try {
            point.estimate = estimate_tail(model, exp, derive_seed(master_seed, kEquivLevelTag + level));
        } catch (const std::exception& e) {
            point.failed = true;
            point.error = e.what();
        }
        curve.points.push_back(std::move(point));
    }

    curve.tail_decreases = 0;
    for (std::size_t i = curve.points.size(); i-- > 1;) {
        const auto& cur = curve.points[i];
        const auto& prev = curve.points[i - 1];
        if (cur.failed || prev.failed) break;
        if (cur.estimate.log_scaled < prev.estimate.log_scaled)
            ++curve.tail_decreases;
        else
            break;
    }
    return curve;
}

std::string EquivCurve::to_json() const {
    nlohmann::ordered_json j;
    j["delta"] = delta;
    j["delta_calibrated"] = delta_calibrated;
    j["calibration_quantile"] = calibration_quantile;
    j["pilot_paths"] = pilot_paths;
    j["tail_decreases"] = tail_decreases;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : points) {
        nlohmann::ordered_json jp;
        jp["epsilon"] = p.epsilon;
        jp["failed"] = p.failed;
        if (p.failed)
            jp["error"] = p.error;
        else
            jp["estimate"] = nlohmann::ordered_json::parse(p.estimate.to_json());
        pts.push_back(jp);
    }
    j["points"] = pts;
    return j.dump(2);
}

std::string EquivCurve::to_csv() const {
    std::string out = "epsilon,log_scaled,ci_lo,ci_hi,is_bound\n";
    char buf[160];
    for (const auto& p : points) {
        if (p.failed) continue;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n", p.epsilon, p.estimate.log_scaled,
                      p.estimate.ci.lo, p.estimate.ci.hi, p.estimate.is_bound ? 1 : 0);
        out += buf;
    }
    return out;
}

ExitCurve exit_curve(const ModelSpec& model, std::vector<double> thresholds, double epsilon, double p_exponent,
                     std::size_t n_paths, const Vec& x0, double horizon, const StepperConfig& cfg,
                     std::uint64_t master_seed) {
    TailExperiment exp;
    exp.statistic = TailStatistic::energy_ball_exit(kInf, p_exponent);
    exp.epsilon = epsilon;
    exp.n_paths = n_paths;
    exp.x0 = x0;
    exp.horizon = horizon;
    exp.cfg = cfg;
    const std::uint64_t ensemble_seed = derive_seed(master_seed, kExitEnsembleTag);
    const auto values = sample_statistics(model, exp, ensemble_seed);

    if (thresholds.empty()) {
        std::vector<double> finite;
        finite.reserve(values.size());
        for (const auto& s : values)
            if (std::isfinite(s.value)) finite.push_back(s.value);
        if (finite.empty()) throw std::runtime_error("exit_curve: ensemble produced no finite energies");
        const double top_q = 1.0 - 0.5 / static_cast<double>(n_paths);
        for (double q : {0.05, 0.25, 0.5, 0.75, 0.9, 0.97, 0.99, 0.997, 0.999, top_q})
            thresholds.push_back(sample_quantile(finite, q));
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    } else {
        std::sort(thresholds.begin(), thresholds.end());
    }

    ExitCurve curve;
    curve.epsilon = epsilon;
    curve.p_exponent = p_exponent;
    for (double m : thresholds) {
        TailExperiment level = exp;
        level.statistic = TailStatistic::energy_ball_exit(m, p_exponent);
        curve.points.push_back(estimate_tail_from_samples(model, level, values, ensemble_seed));
    }
    return curve;
}

std::string ExitCurve::to_json() const {
    nlohmann::ordered_json j;
    j["epsilon"] = epsilon;
    j["p_exponent"] = p_exponent;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : points) pts.push_back(nlohmann::ordered_json::parse(p.to_json()));
    j["points"] = pts;
    return j.dump(2);
}

std::string ExitCurve::to_csv() const {
    std::string out = "M,p_hat,log_scaled,ci_lo,ci_hi,is_bound\n";
    char buf[200];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", p.threshold, p.p_hat, p.log_scaled,
                      p.ci.lo, p.ci.hi, p.is_bound ? 1 : 0);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rate-function estimation
// ---------------------------------------------------------------------------

namespace {

struct SkeletonDiscretization {
    const ModelSpec& model;
    const Vec& x0;
    const Vec& y;
    double horizon;
    std::size_t n_intervals;
    double dt;

    std::size_t m() const { return model.diffusion.m(); }

    // Forward sweep storing all knots; returns false on a singular midpoint.
    bool forward(const std::vector<Vec>& u, std::vector<Vec>& g) const {
        g.assign(n_intervals + 1, Vec());
        g[0] = x0;
        Vec cur = x0;
        for (std::size_t k = 0; k < n_intervals; ++k) {
            try {
                skeleton_step(model.diffusion, u[k], dt, cur);
            } catch (const std::runtime_error&) {
                return false;
            }
            if (!all_finite(cur)) return false;
            g[k + 1] = cur;
        }
        return true;
    }

    // Augmented-Lagrangian merit: control energy + <mu, gap>_H + lambda |gap|_H^2.
    double objective(const std::vector<Vec>& u, const std::vector<Vec>& g, double lambda, const Vec& mu) const {
        double e = 0.0;
        for (const auto& uk : u) e += 0.5 * dt * dot(uk, uk);
        const Vec gap = sub(g.back(), y);
        const double gh = model.space->h_norm(gap);
        return e + model.space->h_inner(mu, gap) + lambda * gh * gh;
    }

    double terminal_gap(const std::vector<Vec>& g) const { return model.space->h_norm(sub(g.back(), y)); }

    // Exact discrete adjoint of the midpoint forward map.
    void gradient(const std::vector<Vec>& u, const std::vector<Vec>& g, double lambda, const Vec& mult,
                  std::vector<Vec>& grad) const {
        const std::size_t n = model.space->dim();
        grad.assign(n_intervals, Vec(m(), 0.0));
        Vec seed = sub(g.back(), y);
        for (std::size_t i = 0; i < n; ++i) seed[i] = 2.0 * lambda * seed[i] + mult[i];
        Vec mu = model.space->riesz_apply(seed);

        const bool multiplicative =
            !model.diffusion.is_zero() && model.diffusion.kind() == DiffusionSpec::Kind::LinearMultiplicative;
        Vec ones(n, 1.0);
        for (std::size_t k = n_intervals; k-- > 0;) {
            if (model.diffusion.is_zero()) {
                for (std::size_t j = 0; j < grad[k].size(); ++j) grad[k][j] = dt * u[k][j];
                continue;
            }
            if (!multiplicative) {
                for (std::size_t j = 0; j < m(); ++j)
                    grad[k][j] = dt * (u[k][j] + dot(mu, model.diffusion.column(g[k], j)));
                // mu unchanged: dg_{k+1}/dg_k = I for additive columns.
                continue;
            }
            Vec d(n, 0.0);
            for (std::size_t j = 0; j < m(); ++j) {
                if (u[k][j] == 0.0) continue;
                const Vec wcol = model.diffusion.column(ones, j);
                for (std::size_t i = 0; i < n; ++i) d[i] += u[k][j] * wcol[i];
            }
            Vec nu(n);
            Vec mid(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double z = 0.5 * dt * d[i];
                nu[i] = mu[i] / (1.0 - z);
                mid[i] = 0.5 * (g[k][i] + g[k + 1][i]);
            }
            for (std::size_t j = 0; j < m(); ++j) {
                const Vec wcol = model.diffusion.column(mid, j);
                grad[k][j] = dt * (u[k][j] + dot(nu, wcol));
            }
            for (std::size_t i = 0; i < n; ++i) mu[i] = nu[i] * (1.0 + 0.5 * dt * d[i]);
        }
    }
};

// Least-squares constant-control correction that lands an additive skeleton
// exactly on the target; the corrected control stays admissible, so its
// energy upper-bounds the infimum.
bool project_additive_to_target(const SkeletonDiscretization& disc, std::vector<Vec>& u) {
    const auto& diffusion = disc.model.diffusion;
    if (diffusion.is_zero() || diffusion.kind() != DiffusionSpec::Kind::AdditiveTraceClass) return false;
    std::vector<Vec> g;
    if (!disc.forward(u, g)) return false;
    const Vec gap = sub(disc.y, g.back());
    const std::size_t mm = disc.m();
    DenseMatrix gram(mm, mm);
    Vec rhs(mm, 0.0);
    const Vec zero(disc.model.space->dim(), 0.0);
    for (std::size_t j = 0; j < mm; ++j) {
        const Vec cj = diffusion.column(zero, j);
        rhs[j] = dot(cj, gap);
        for (std::size_t l = 0; l <= j; ++l) {
            const double v = dot(cj, diffusion.column(zero, l));
            gram.at(j, l) = v;
            gram.at(l, j) = v;
        }
    }
    DenseLU lu(gram);
    if (!lu.ok()) return false;
    Vec delta = lu.solve(rhs);
    for (double& v : delta) v /= disc.horizon;
    for (auto& uk : u) axpy(1.0, delta, uk);
    return true;
}

}  // namespace

RateEstimate estimate_rate(const ModelSpec& model, const Vec& x0, const RateTarget& target, double horizon,
                           const RateOptConfig& opt, std::uint64_t seed) {
    if (x0.size() != model.space->dim()) throw std::invalid_argument("estimate_rate: x0 dimension mismatch");
    if (target.y.size() != x0.size()) throw std::invalid_argument("estimate_rate: target dimension mismatch");
    if (!(horizon > 0.0)) throw std::invalid_argument("estimate_rate: horizon must be positive");
    if (model.diffusion.is_zero()) throw std::invalid_argument("estimate_rate: model has no diffusion to steer");
    if (opt.n_intervals < 1) throw std::invalid_argument("estimate_rate: need at least one control interval");

    SkeletonDiscretization disc{model, x0, target.y, horizon, opt.n_intervals,
                                horizon / static_cast<double>(opt.n_intervals)};
    const std::size_t mm = disc.m();
    const bool additive = model.diffusion.kind() == DiffusionSpec::Kind::AdditiveTraceClass;

    RateEstimate best;
    best.model_id = model.model_id;
    best.x0 = x0;
    best.target = target.y;
    best.horizon = horizon;
    best.master_seed = seed;
    best.seed_rule = std::string("restart_seed = ") + seed_rule_string();
    best.i_value = std::numeric_limits<double>::infinity();
    best.terminal_gap = std::numeric_limits<double>::infinity();
    best.infeasible = true;

    int total_iters = 0;
    for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
        std::vector<Vec> u(opt.n_intervals, Vec(mm, 0.0));
        if (restart > 0) {
            GaussianStream g(derive_seed(seed, static_cast<std::uint64_t>(restart)));
            for (auto& uk : u)
                for (double& v : uk) v = 0.3 * g.next();
        }

        double lambda = opt.lambda0;
        Vec multiplier(model.space->dim(), 0.0);
        bool feasible = false;
        double gap = std::numeric_limits<double>::infinity();
        std::vector<Vec> g;
        bool ok = disc.forward(u, g);
        while (true) {
            if (!ok) break;
            // Gradient descent at fixed lambda: Barzilai-Borwein trial steps
            // (the penalty term makes the Hessian stiffen with lambda) under
            // an Armijo backtracking safeguard.
            double step = opt.initial_step;
            double j_cur = disc.objective(u, g, lambda, multiplier);
            std::vector<Vec> grad, prev_u, prev_grad;
            for (int it = 0; it < opt.max_iters; ++it) {
                ++total_iters;
                disc.gradient(u, g, lambda, multiplier, grad);
                double gnorm2 = 0.0;
                for (const auto& gk : grad) gnorm2 += dot(gk, gk);
                if (std::sqrt(gnorm2) <= opt.grad_tol * (1.0 + std::abs(j_cur))) break;
                if (!prev_u.empty()) {
                    double sy = 0.0, yy = 0.0;
                    for (std::size_t k = 0; k < u.size(); ++k)
                        for (std::size_t j = 0; j < u[k].size(); ++j) {
                            const double sv = u[k][j] - prev_u[k][j];
                            const double yv = grad[k][j] - prev_grad[k][j];
                            sy += sv * yv;
                            yy += yv * yv;
                        }
                    if (sy > 0.0 && yy > 0.0) step = std::min(std::max(sy / yy, 1e-8), 1e4);
                }
                prev_u = u;
                prev_grad = grad;
                bool moved = false;
                for (int ls = 0; ls < 50; ++ls) {
                    std::vector<Vec> cand = u;
                    for (std::size_t k = 0; k < cand.size(); ++k) axpy(-step, grad[k], cand[k]);
                    std::vector<Vec> gc;
                    if (disc.forward(cand, gc)) {
                        const double j_new = disc.objective(cand, gc, lambda, multiplier);
                        if (j_new <= j_cur - 1e-4 * step * gnorm2) {
                            u = std::move(cand);
                            g = std::move(gc);
                            j_cur = j_new;
                            moved = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if (!moved) break;
            }

            if (additive) project_additive_to_target(disc, u);
            ok = disc.forward(u, g);
            if (!ok) break;
            gap = disc.terminal_gap(g);
            if (gap <= target.match_tol) {
                feasible = true;
                break;
            }
            // multiplier update drives the gap to zero with bounded lambda
            const Vec gap_vec = sub(g.back(), target.y);
            axpy(2.0 * lambda, gap_vec, multiplier);
            lambda *= opt.lambda_factor;
            if (lambda > opt.lambda_max) break;
        }

        if (!ok) continue;
        ControlPath control;
        control.times.resize(opt.n_intervals + 1);
        for (std::size_t k = 0; k <= opt.n_intervals; ++k)
            control.times[k] = horizon * static_cast<double>(k) / static_cast<double>(opt.n_intervals);
        control.hdot = u;
        const double e = energy(control);
        const bool better =
            feasible ? (best.infeasible || e < best.i_value) : (best.infeasible && gap < best.terminal_gap);
        if (better) {
            best.i_value = e;
            best.control = std::move(control);
            best.terminal_gap = gap;
            best.converged = feasible;
            best.infeasible = !feasible;
        }
    }
    best.iterations = total_iters;
    return best;
}

std::string RateEstimate::to_json() const {
    nlohmann::ordered_json j;
    j["model_id"] = model_id;
    j["i_value"] = i_value;
    j["terminal_gap"] = terminal_gap;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["infeasible"] = infeasible;
    j["note"] = note;
    j["master_seed"] = master_seed;
    j["seed_rule"] = seed_rule;
    j["horizon"] = horizon;
    j["x0"] = x0;
    j["target"] = target;
    auto ctrl = nlohmann::ordered_json::object();
    ctrl["times"] = control.times;
    auto hd = nlohmann::ordered_json::array();
    for (const auto& uk : control.hdot) hd.push_back(uk);
    ctrl["hdot"] = hd;
    j["control"] = ctrl;
    return j.dump(2);
}

}  // namespace sldp
