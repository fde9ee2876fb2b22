#include "sldp/stepper.hpp"

#include <cmath>
#include <limits>

#include "sldp/framework.hpp"

namespace sldp {

namespace {

struct WeakForm {
    // Weak residual r(y) = RieszH (y - x - w) - c A_load(t, y); the H-norm of
    // the strong residual is sqrt(r . RieszH^{-1} r).
    const ModelSpec& model;
    double t;
    double c;
    const Vec& x_plus_noise;

    Vec operator()(const Vec& y) const {
        Vec r = model.space->riesz_apply(sub(y, x_plus_noise));
        if (model.has_drift() && c != 0.0) axpy(-c, model.drift_load(t, y), r);
        return r;
    }

    double h_norm_of_weak(const Vec& r) const {
        const double q = dot(r, model.space->riesz_solve(r));
        return q > 0.0 ? std::sqrt(q) : 0.0;
    }

    std::function<Vec(const Vec&)> jacobian_solver(const Vec& y) const {
        const auto& space = *model.space;
        const DriftJacobian dj = model.drift_jacobian(t, y);
        const double riesz_scale = 1.0 - c * dj.riesz_coeff;
        if (space.h_kind() == HKind::DualH1) {
            DenseMatrix mat = space.riesz_dense();
            mat.scale(riesz_scale);
            mat.add_tridiag(-c, dj.local);
            DenseLU lu(std::move(mat));
            if (!lu.ok()) return nullptr;
            return [lu = std::move(lu)](const Vec& rhs) { return lu.solve(rhs); };
        }
        TriDiag mat = space.mass_matrix();
        mat.scale(riesz_scale);
        mat.add_scaled(-c, dj.local);
        TriDiagLU lu(mat);
        if (!lu.ok()) return nullptr;
        return [lu = std::move(lu)](const Vec& rhs) { return lu.solve(rhs); };
    }
};

}  // namespace

Vec implicit_step(const ModelSpec& model, double t_drift, const Vec& x, double drift_scale, const Vec& noise_term,
                  const StepperConfig& cfg) {
    check_same_dim(x, noise_term, "implicit_step");
    if (!all_finite(x)) throw std::invalid_argument("implicit_step: non-finite state");
    if (drift_scale < 0.0) throw std::invalid_argument("implicit_step: drift_scale must be nonnegative");
    Vec xw = add(x, noise_term);
    if (drift_scale == 0.0 || !model.has_drift()) return xw;

    const double c = drift_scale * cfg.dt;
    WeakForm form{model, t_drift, c, xw};

    // The tolerance scales with the step magnitude; a fixed absolute residual
    // is below double precision once states grow large.
    const double tol = cfg.solver_tol * std::max(1.0, model.space->h_norm(xw));
    StepperConfig inner = cfg;
    inner.solver_tol = tol * 1e-2;  // aim tighter, accept the contract
    const NormFn norm = [&form](const Vec& r) { return form.h_norm_of_weak(r); };
    const JacobianSolverFactory jac = [&form](const Vec& y) { return form.jacobian_solver(y); };
    const ResidualMap residual = [&form](const Vec& y) { return form(y); };

    try {
        return solve_monotone(residual, xw, inner, jac, norm);
    } catch (const NonconvergenceError& e) {
        if (e.last_residual() <= tol && !e.last_iterate().empty()) return e.last_iterate();
        throw;
    }
}

namespace {

void walk_impl(const ModelSpec& model, const Vec& x0, double epsilon, double horizon, const StepperConfig& cfg,
               const NoiseStream& noise, SimMode mode,
               const std::function<void(std::size_t, double, const Vec&)>& on_state) {
    if (mode == SimMode::Skeleton) throw std::invalid_argument("simulate: skeleton paths come from skeleton_solve");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("simulate: epsilon must lie in (0, 1]");
    if (x0.size() != model.space->dim()) throw std::invalid_argument("simulate: x0 dimension mismatch");
    if (!all_finite(x0)) throw std::invalid_argument("simulate: non-finite initial state");
    if (!std::isfinite(model.space->v_norm(x0))) throw std::invalid_argument("simulate: x0 has no finite V-norm");
    cfg.validate(horizon);

    const double n_real = horizon / cfg.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(n_real));
    if (n_steps < 1 || std::abs(n_real - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, n_real))
        throw std::invalid_argument("simulate: horizon must be an integer multiple of dt");
    if (!model.diffusion.is_zero()) {
        if (noise.m != model.diffusion.m())
            throw std::invalid_argument("simulate: noise stream dimension does not match the model truncation");
        if (noise.n_steps < n_steps) throw std::invalid_argument("simulate: noise stream too short");
        if (std::abs(noise.dt - cfg.dt) > 1e-12 * std::max(1.0, cfg.dt))
            throw std::invalid_argument("simulate: noise stream dt does not match cfg.dt");
    }

    const double sqrt_eps = std::sqrt(epsilon);
    const bool with_drift = (mode == SimMode::Full) && model.has_drift();
    Vec state = x0;
    Vec noise_term(state.size(), 0.0);
    on_state(0, 0.0, state);
    for (std::size_t k = 0; k < n_steps; ++k) {
        if (!model.diffusion.is_zero())
            model.diffusion.apply_into(state, noise.row(k), sqrt_eps, noise_term);
        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        Vec next;
        if (with_drift) {
            const double before2 = [&] {
                if (!cfg.energy_check) return 0.0;
                const Vec xw = add(state, noise_term);
                const double b = model.space->h_norm(xw);
                return b * b;
            }();
            next = implicit_step(model, epsilon * t_next, state, epsilon, noise_term, cfg);
            if (cfg.energy_check) {
                // Discrete coercivity identity of the monotone implicit step:
                // |X_{k+1}|_H^2 <= |X_k + w|_H^2 + 2 eps dt <A(t, X_{k+1}), X_{k+1}>.
                const double after = model.space->h_norm(next);
                const double pair_term =
                    2.0 * epsilon * cfg.dt * pairing(model.drift_load(epsilon * t_next, next), next);
                const double slack =
                    1e-12 + 8.0 * cfg.solver_tol * (after + 1.0) + 1e-12 * std::abs(before2 + pair_term);
                if (after * after > before2 + pair_term + slack)
                    throw std::runtime_error("simulate: discrete energy inequality violated at step " +
                                             std::to_string(k + 1));
            }
        } else {
            next = add(state, noise_term);
        }
        if (!all_finite(next)) throw BlowUpError(k + 1, std::numeric_limits<double>::infinity(), std::move(state));
        const double hn = model.space->h_norm(next);
        if (hn > kBlowUpThreshold) throw BlowUpError(k + 1, hn, std::move(state));
        state = std::move(next);
        on_state(k + 1, t_next, state);
    }
}

}  // namespace

void simulate_walk(const ModelSpec& model, const Vec& x0, double epsilon, double horizon, const StepperConfig& cfg,
                   const NoiseStream& noise, SimMode mode,
                   const std::function<void(std::size_t, double, const Vec&)>& on_state) {
    walk_impl(model, x0, epsilon, horizon, cfg, noise, mode, on_state);
}

Path simulate(const ModelSpec& model, const Vec& x0, double epsilon, double horizon, const StepperConfig& cfg,
              const NoiseStream& noise, SimMode mode) {
    StepperConfig attempt = cfg;
    const NoiseStream* stream = &noise;
    NoiseStream refined;
    for (int halving = 0;; ++halving) {
        Path p;
        p.meta = PathMeta{epsilon, attempt.dt, stream->seed, model.model_id, mode};
        try {
            walk_impl(model, x0, epsilon, horizon, attempt, *stream, mode,
                      [&p](std::size_t, double t, const Vec& s) {
                          p.times.push_back(t);
                          p.states.push_back(s);
                      });
            return p;
        } catch (const NonconvergenceError&) {
            if (halving >= cfg.max_dt_halvings) throw;
            attempt.dt *= 0.5;
            if (!model.diffusion.is_zero()) {
                if (!stream->regenerable) throw;
                refined = sample_stream(stream->m, attempt.dt, 2 * stream->n_steps, stream->seed);
                stream = &refined;
            }
        }
    }
}

}  // namespace sldp
