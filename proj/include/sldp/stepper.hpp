#pragma once

#include <functional>

#include "sldp/models.hpp"
#include "sldp/noise.hpp"
#include "sldp/path.hpp"
#include "sldp/solver.hpp"

namespace sldp {

/// H-norm threshold beyond which a trajectory is declared blown up; separates
/// genuine growth from solver failure in estimator bookkeeping.
inline constexpr double kBlowUpThreshold = 1e8;

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(std::size_t step, double h_norm, Vec last_finite)
        : std::runtime_error("simulate: H-norm exceeded blow-up threshold at step " + std::to_string(step)),
          step_(step),
          h_norm_(h_norm),
          last_finite_(std::move(last_finite)) {}

    std::size_t step() const { return step_; }
    double h_norm() const { return h_norm_; }
    const Vec& last_finite_state() const { return last_finite_; }

private:
    std::size_t step_;
    double h_norm_;
    Vec last_finite_;
};

/// One drift-implicit Euler-Maruyama step: solves
///   y = x + drift_scale * cfg.dt * A(t_drift, y) + noise_term
/// to residual <= cfg.solver_tol in the H-norm (the inner Newton aims two
/// orders tighter and accepts anything within the contract). drift_scale = 0
/// returns x + noise_term exactly.
Vec implicit_step(const ModelSpec& model, double t_drift, const Vec& x, double drift_scale, const Vec& noise_term,
                  const StepperConfig& cfg);

/// Streaming walk over a simulated trajectory; on_state(k, t_k, state) fires
/// for every knot including k = 0. Used by the ensemble estimators to avoid
/// materializing paths.
void simulate_walk(const ModelSpec& model, const Vec& x0, double epsilon, double horizon, const StepperConfig& cfg,
                   const NoiseStream& noise, SimMode mode,
                   const std::function<void(std::size_t, double, const Vec&)>& on_state);

/// Full trajectory of the rescaled equation (mode Full, drift eps * A(eps t))
/// or the zero-drift equation (mode ZeroDrift); both apply sqrt(eps) to the
/// same increments so coupled statistics share one stream. Retries at dt/2
/// (regenerating the stream from its seed) up to cfg.max_dt_halvings times
/// when the inner solver fails to converge.
Path simulate(const ModelSpec& model, const Vec& x0, double epsilon, double horizon, const StepperConfig& cfg,
              const NoiseStream& noise, SimMode mode);

}  // namespace sldp
