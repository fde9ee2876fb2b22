#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sldp/models.hpp"
#include "sldp/path.hpp"
#include "sldp/stats.hpp"
#include "sldp/stepper.hpp"

namespace sldp {

/// Piecewise-constant control derivative hdot on a grid over [0,T]; h itself
/// starts at 0 and is the running integral.
struct ControlPath {
    Vec times;                  // knots, times[0] = 0, strictly increasing
    std::vector<Vec> hdot;      // one m-vector per interval

    static ControlPath zero(double horizon, std::size_t n_intervals, std::size_t m);
    std::size_t n_intervals() const { return hdot.size(); }
    std::size_t m() const { return hdot.empty() ? 0 : hdot[0].size(); }
    const Vec& hdot_on_interval_containing(double t) const;
    void validate() const;
};

/// Control energy (1/2) int |hdot|_U^2 dt, exact for piecewise constants.
double energy(const ControlPath& control);

/// Deterministic skeleton equation g(t) = x + int_0^t B(g) hdot ds, solved by
/// implicit midpoint on the cfg.dt grid; the control grid must be a coarsening
/// of (or equal to) that grid.
Path skeleton_solve(const ModelSpec& model, const Vec& x0, const ControlPath& control, double horizon,
                    const StepperConfig& cfg);

/// max_k |a(t_k) - b(t_k)|_H^2 over a shared time grid.
double sup_h_distance(const Path& a, const Path& b, const GalerkinSpace& space);

/// Small-time energy functional
///   sup_t |X(t)|_H^p + eps int_0^T |X(t)|_H^{p-2} |X(t)|_V^alpha dt
/// with trapezoidal time quadrature; requires a mode-full path at matching eps.
double hv_energy(const Path& path, double epsilon, double p_exponent, const ModelSpec& model);

struct TailStatistic {
    enum class Kind {
        EquivSupDistance,  // sup_t |X^eps - Y^eps|_H^2 > delta, coupled streams
        EnergyBallExit,    // (|X^eps|_{H,V}(T))^p > M
        SupDisplacement,   // sup_t |Y^eps(t) - x0|_H^2 > delta, zero drift
    };
    Kind kind = Kind::EquivSupDistance;
    double threshold = 1.0;
    double p_exponent = 2.0;

    static TailStatistic equiv_sup_distance(double delta) { return {Kind::EquivSupDistance, delta, 2.0}; }
    static TailStatistic energy_ball_exit(double m, double p = 2.0) { return {Kind::EnergyBallExit, m, p}; }
    static TailStatistic sup_displacement(double delta) { return {Kind::SupDisplacement, delta, 2.0}; }
    std::string kind_string() const;
};

struct TailExperiment {
    TailStatistic statistic;
    double epsilon = 0.1;
    std::size_t n_paths = 1000;
    Vec x0;
    double horizon = 1.0;
    StepperConfig cfg;
};

struct TailEstimate {
    std::string model_id;
    std::string statistic;
    double epsilon = 0.0;
    double threshold = 0.0;
    double p_exponent = 2.0;
    std::size_t n_paths = 0;
    std::size_t n_hits = 0;
    std::size_t n_blowups = 0;   // hits for exit statistics, diagnostics otherwise
    std::size_t n_failures = 0;  // solver nonconvergence, recorded and excluded from hits
    double p_hat = 0.0;
    double log_scaled = 0.0;  // eps log p_hat, or the one-sided bound when n_hits = 0
    bool is_bound = false;
    BinomialCI ci;
    std::uint64_t master_seed = 0;
    std::string seed_rule;
    std::string noise_basis;

    std::string to_json() const;
};

/// Per-path statistic value; NaN when the path failed (excluded from hits),
/// +inf when it blew up under an exit statistic (counted as a hit).
struct StatisticSample {
    double value = 0.0;
    bool blew_up = false;
    bool failed = false;
};

/// One statistic value per ensemble member, path i seeded derive_seed(master,
/// i). Deterministic in master_seed; members run in parallel.
std::vector<StatisticSample> sample_statistics(const ModelSpec& model, const TailExperiment& experiment,
                                               std::uint64_t master_seed);

TailEstimate estimate_tail(const ModelSpec& model, const TailExperiment& experiment, std::uint64_t master_seed);

/// Threshold an already-sampled ensemble (shared-seed sweeps: nesting of hit
/// events across thresholds is exact).
TailEstimate estimate_tail_from_samples(const ModelSpec& model, const TailExperiment& experiment,
                                        const std::vector<StatisticSample>& values, std::uint64_t master_seed);

struct EquivCurvePoint {
    double epsilon = 0.0;
    bool failed = false;
    std::string error;
    TailEstimate estimate;
};

struct EquivCurve {
    double delta = 0.0;
    bool delta_calibrated = false;
    double calibration_quantile = 0.10;
    std::size_t pilot_paths = 0;
    std::vector<EquivCurvePoint> points;
    /// Consecutive strict decreases of log_scaled at the tail of the list.
    int tail_decreases = 0;

    std::string to_json() const;
    std::string to_csv() const;  // epsilon, log_scaled, ci_lo, ci_hi, is_bound
};

/// eps -> eps log P(sup |X^eps - Y^eps|_H^2 > delta) over a decreasing
/// epsilon list with per-level master-seed-derived streams. Pass delta = NaN
/// to self-calibrate it at the stated quantile of a pilot ensemble at the
/// largest epsilon (a fixed absolute delta can make every level 0 or 1 at
/// desk scale).
EquivCurve equiv_curve(const ModelSpec& model, double delta, const std::vector<double>& epsilon_list,
                       std::size_t n_paths, const Vec& x0, double horizon, const StepperConfig& cfg,
                       std::uint64_t master_seed, double calibration_quantile = 0.10);

struct ExitCurve {
    double epsilon = 0.0;
    double p_exponent = 2.0;
    std::vector<TailEstimate> points;  // shared ensemble, nested thresholds

    std::string to_json() const;
    std::string to_csv() const;  // M, p_hat, log_scaled, ci_lo, ci_hi, is_bound
};

/// Exit probabilities over an M grid on one shared ensemble (event nesting is
/// exact under shared seeds). An empty threshold list self-calibrates the
/// grid from ensemble quantiles.
ExitCurve exit_curve(const ModelSpec& model, std::vector<double> thresholds, double epsilon, double p_exponent,
                     std::size_t n_paths, const Vec& x0, double horizon, const StepperConfig& cfg,
                     std::uint64_t master_seed);

struct RateTarget {
    Vec y;
    double match_tol = 1e-6;  // H-norm terminal gap tolerance
};

struct RateOptConfig {
    std::size_t n_intervals = 16;
    int max_iters = 400;       // gradient steps per penalty stage
    int restarts = 1;
    double initial_step = 0.5;
    double grad_tol = 1e-10;
    double lambda0 = 1.0;
    double lambda_factor = 10.0;
    double lambda_max = 1e8;
};

struct RateEstimate {
    std::string model_id;
    Vec x0;
    Vec target;
    double horizon = 1.0;
    double i_value = 0.0;
    ControlPath control;
    double terminal_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    bool infeasible = false;
    /// The estimate bounds inf over terminal-hitting controls from above; the
    /// rate function's infimum over whole-path classes is never claimed.
    std::string note = "terminal-target upper bound";
    std::uint64_t master_seed = 0;
    std::string seed_rule;

    std::string to_json() const;
};

/// Penalty + adjoint-gradient upper bound on
///   inf { (1/2) int |hdot|^2 : skeleton hits y at T within match_tol }.
/// For additive diffusions the final control is projected onto exact terminal
/// feasibility (least squares through the constant-control direction), which
/// keeps the reported value a true upper bound.
RateEstimate estimate_rate(const ModelSpec& model, const Vec& x0, const RateTarget& target, double horizon,
                           const RateOptConfig& opt, std::uint64_t seed = 0);

}  // namespace sldp
