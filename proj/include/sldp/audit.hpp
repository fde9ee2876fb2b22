#pragma once

#include <cstdint>

#include "sldp/framework.hpp"
#include "sldp/models.hpp"

namespace sldp {

/// Condition identifiers emitted by the auditor, in report order.
namespace condition {
inline constexpr const char* kA1 = "A1_hemicontinuity";
inline constexpr const char* kA2 = "A2_local_monotonicity";
inline constexpr const char* kA2Rho = "A2_rho_coefficient";
inline constexpr const char* kA3 = "A3_growth";
inline constexpr const char* kNoiseGrowth = "B_growth_V";
inline constexpr const char* kNoiseLipschitz = "B_lipschitz_H";
inline constexpr const char* kCoercivity = "coercivity";
}  // namespace condition

/// Samples (t, v1, v2, v3) tuples and checks, against the model's declared
/// constants:
///   A1  three-point secant continuity of s -> <A(t, v1 + s v2), v3>,
///   A2  2<A(t,v1)-A(t,v2), v1-v2> <= -eta |d|_V^alpha + (K + rho(v2)) |d|_H^2,
///   A3  |A(t,v)|_{V*}^{alpha/(alpha-1)} <= C (1+|v|_V^alpha)(1+|v|_H^beta),
///   noise growth |B(v)|_{HS->V}^2 <= C (1+|v|_V^2),
///   noise Lipschitz |B(v1)-B(v2)|_{HS->H}^2 <= L^2 |v1-v2|_H^2,
///   coercivity <A(t,v),v> + |B(v)|_2^2 + (eta/2)|v|_V^alpha <= C (1+|v|_H^2).
///
/// Existential constants (A3, noise growth, coercivity, and the rho multiplier
/// when the model marks it fitted) are fitted as the smallest feasible value
/// on the first half of the samples, frozen with 10% headroom, and re-checked
/// on the second half. Declared constants are checked on every sample. The
/// report's fitted constants are taken over the full sample set.
///
/// Deterministic in (seed, n, model); samples may be evaluated in parallel.
AssumptionReport audit_assumptions(const ModelSpec& model, const SamplerSpec& sampler, std::size_t n,
                                   const AssumptionParams& params, std::uint64_t seed);

/// Convenience overload using the model's own declared constants.
AssumptionReport audit_assumptions(const ModelSpec& model, const SamplerSpec& sampler, std::size_t n,
                                   std::uint64_t seed);

}  // namespace sldp
