#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "sldp/framework.hpp"
#include "sldp/galerkin.hpp"
#include "sldp/la.hpp"
#include "sldp/noise.hpp"

namespace sldp {

/// Jacobian of a drift in dual representation: a tridiagonal local part plus
/// an optional multiple of the H-Riesz matrix (the nonlocal reaction term of
/// the dual-H1 triple).
struct DriftJacobian {
    TriDiag local;
    double riesz_coeff = 0.0;
};

/// A concrete (A, B) pair on a discrete Gelfand triple together with its
/// declared assumption constants and the closed-form local-monotonicity
/// weight rho. Drift evaluators return assembled dual vectors:
/// pairing(A(t,v), w) = drift_load(t, v) . w.
class ModelSpec {
public:
    std::string model_id;
    std::shared_ptr<const GalerkinSpace> space;
    DiffusionSpec diffusion;
    AssumptionParams assumptions;
    std::map<std::string, double> params;

    std::function<Vec(double t, const Vec& v)> drift_load;  // null => zero drift
    std::function<DriftJacobian(double t, const Vec& v)> drift_jacobian;

    /// rho(v) of (A2). When rho_coefficient_fitted is set the evaluator is the
    /// shape only and the auditor fits + freezes the multiplier.
    std::function<double(const Vec&)> rho;
    std::string rho_formula = "0";
    bool rho_coefficient_fitted = false;

    bool has_drift() const { return static_cast<bool>(drift_load); }

    /// H-representation of the drift (Riesz solve of the dual vector).
    Vec drift_h(double t, const Vec& v) const;

    double rho_value(const Vec& v) const { return rho ? rho(v) : 0.0; }
};

/// Spaces for the bundled models; build the space first, put the diffusion on
/// it, then construct the model. Factories reject a diffusion living on a
/// different space instance.
std::shared_ptr<const GalerkinSpace> heat_space(std::size_t n_dof);
std::shared_ptr<const GalerkinSpace> burgers_space(std::size_t n_dof);
std::shared_ptr<const GalerkinSpace> plaplace_space(std::size_t n_dof, double p);
std::shared_ptr<const GalerkinSpace> pme_space(std::size_t n_dof, double r);

/// Semilinear Burgers-type drift Laplacian + <f(X), grad X> + g(X) on
/// V = W_0^{1,2}, d = 1. Convection is assembled in the pointwise
/// skew-symmetric form (1/2)(f(u) u', w) - (1/2)(f(u) u, w'), which pairs to
/// zero against the transported state for every u, w.
struct BurgersParams {
    std::function<double(double)> f;  // convection coefficient, Lipschitz
    std::function<double(double)> f_prime;
    std::function<double(double)> g;  // reaction, |g| <= C(|x|^r + 1)
    std::function<double(double)> g_prime;
    double r = 3.0;
    double s = 2.0;
    double c1 = 1.0;  // recorded coefficients of the default cubic reaction
    double c2 = 1.0;
};

BurgersParams default_burgers_reaction(double c1, double c2);

ModelSpec make_burgers(std::shared_ptr<const GalerkinSpace> space, BurgersParams params, DiffusionSpec diffusion);

/// div(|grad X|^{p-2} grad X) - c |X|^{p_tilde - 2} X on V = W_0^{1,p}.
ModelSpec make_plaplace(std::shared_ptr<const GalerkinSpace> space, double p, double p_tilde, double c,
                        DiffusionSpec diffusion);

/// L Psi(t, X) + Phi(t, X) with Psi(t,x) = f(t)|x|^{r-1}x, Phi(t,x) = g(t)x on
/// V = L^{r+1} over the dual-H1 pivot space; L is the discrete Dirichlet
/// Laplacian. f must stay >= f_min > 0 and |g| <= g_max on the horizon.
struct PMEParams {
    double r = 3.0;
    std::function<double(double)> f_time;  // strictly positive
    std::function<double(double)> g_time;  // bounded
    double f_min = 1.0;
    double g_max = 1.0;
};

PMEParams default_pme_params(double r = 3.0);

ModelSpec make_pme(std::shared_ptr<const GalerkinSpace> space, PMEParams params, DiffusionSpec diffusion);

/// p = 2 linear heat model; calibration target with exact monotonicity
/// constant eta = 2.
ModelSpec make_heat(std::shared_ptr<const GalerkinSpace> space, DiffusionSpec diffusion);

/// Scalar zero-drift instrument: H = V = R, dY = sqrt(eps) b dW.
ModelSpec make_scalar_additive(double b);

/// Diagonal additive instrument on R^m: column k of B is sigma_k e_k.
ModelSpec make_diag_additive(Vec sigmas);

/// Registry used by config files: "burgers", "plaplace", "pme", "heat",
/// "scalar_additive", "diag_additive".
struct ModelBuildConfig {
    std::string id = "heat";
    std::size_t n_dof = 64;
    // plaplace
    double p = 4.0;
    double p_tilde = 2.0;
    double c = 1.0;
    // pme / burgers
    double r = 3.0;
    double s = 2.0;
    double c1 = 1.0;
    double c2 = 1.0;
    // scalar / diag instruments
    double b = 1.0;
    Vec sigmas;
    // noise
    std::string noise_kind = "additive";  // additive | multiplicative | zero
    std::size_t noise_m = 8;
    double noise_amplitude = 1.0;
};

ModelSpec build_model(const ModelBuildConfig& cfg);

}  // namespace sldp
