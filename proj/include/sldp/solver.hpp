#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sldp/la.hpp"

namespace sldp {

/// Drift-implicit Euler-Maruyama stepping parameters.
struct StepperConfig {
    double dt = 1e-3;
    double solver_tol = 1e-10;
    int max_iters = 60;
    /// How many times simulate() may restart itself at dt/2 after an inner
    /// nonconvergence. Ensemble estimators run with 0 and record the failure.
    int max_dt_halvings = 0;
    /// Per-step discrete energy inequality check (costs one drift evaluation
    /// per step when enabled).
    bool energy_check = true;

    void validate(double horizon) const {
        if (dt <= 0.0) throw std::invalid_argument("StepperConfig: dt must be positive");
        if (horizon > 0.0 && dt > horizon + 1e-15) throw std::invalid_argument("StepperConfig: dt exceeds horizon");
        if (solver_tol <= 0.0) throw std::invalid_argument("StepperConfig: solver_tol must be positive");
        if (max_iters < 1) throw std::invalid_argument("StepperConfig: max_iters must be >= 1");
    }
};

class NonconvergenceError : public std::runtime_error {
public:
    NonconvergenceError(std::string what, double last_residual, std::vector<double> history, Vec last_iterate = {})
        : std::runtime_error(std::move(what)),
          last_residual_(last_residual),
          history_(std::move(history)),
          last_iterate_(std::move(last_iterate)) {}

    double last_residual() const { return last_residual_; }
    const std::vector<double>& residual_history() const { return history_; }
    const Vec& last_iterate() const { return last_iterate_; }

private:
    double last_residual_;
    std::vector<double> history_;
    Vec last_iterate_;
};

using ResidualMap = std::function<Vec(const Vec&)>;
/// Builds, at the current iterate, a solver for the Newton system J(y) d = rhs.
using JacobianSolverFactory = std::function<std::function<Vec(const Vec&)>(const Vec&)>;
using NormFn = std::function<double(const Vec&)>;

/// Damped Newton for residual maps that are strongly monotone on the scales we
/// step at (local monotonicity of the drift makes the implicit relation so for
/// small dt). Falls back to fixed-point relaxation when no Jacobian is given
/// or a Newton direction fails to reduce the residual. Accepted iterates have
/// strictly decreasing residual norm; throws NonconvergenceError with the
/// residual history otherwise.
Vec solve_monotone(const ResidualMap& residual, const Vec& x0, const StepperConfig& cfg,
                   const JacobianSolverFactory& jacobian = nullptr, const NormFn& norm = nullptr);

}  // namespace sldp
