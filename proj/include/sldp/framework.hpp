#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldp/galerkin.hpp"
#include "sldp/la.hpp"

namespace sldp {

/// Dualization between V* and V in the assembled-coordinate representation:
/// dual vectors act on states through the plain dot product. For f = embed_h(u)
/// this reproduces the H inner product with u.
double pairing(const Vec& f, const Vec& v);

double norm(SpaceTag tag, const Vec& v, const GalerkinSpace& space);

Vec embed_h(const Vec& u, const GalerkinSpace& space);

/// Constants of the local-monotonicity framework: for fixed alpha > 1 there
/// are beta >= 0, eta > 0, K and C with
///   (A2)  2<A(t,v1)-A(t,v2), v1-v2> <= -eta ||v1-v2||_V^alpha
///                                       + (K + rho(v2)) ||v1-v2||_H^2,
///   (A3)  ||A(t,v)||_{V*}^{alpha/(alpha-1)} <= C (1+||v||_V^alpha)(1+||v||_H^beta).
struct AssumptionParams {
    double alpha = 2.0;
    double beta = 0.0;
    double eta = 1.0;
    double big_k = 0.0;
    double big_c = 1.0;

    void validate() const {
        if (!(alpha > 1.0)) throw std::invalid_argument("AssumptionParams: alpha must exceed 1");
        if (!(eta > 0.0)) throw std::invalid_argument("AssumptionParams: eta must be positive");
        if (beta < 0.0) throw std::invalid_argument("AssumptionParams: beta must be nonnegative");
    }
};

struct Violation {
    std::string condition_id;
    std::size_t sample_index = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string note;
};

struct ConditionSummary {
    std::string condition_id;
    std::size_t n_samples = 0;
    std::size_t n_violations = 0;
    double fitted_constant = 0.0;
    double worst_margin = 0.0;  // max over validation samples of lhs - rhs
};

/// Evidence container for the sampled A1-A3 / noise-bound checks.
struct AssumptionReport {
    std::string model_id;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    std::vector<Violation> violations;        // sorted by sample index
    std::vector<ConditionSummary> conditions;  // fixed condition order

    bool passed() const { return violations.empty(); }
    double fitted(const std::string& condition_id) const;
    std::string to_json() const;
};

/// State sampler for the auditor: sine-mode combinations with j^{-2}
/// coefficient decay and a stratified log-uniform overall scale, so samples
/// stay V-bounded while sweeping magnitudes. Evaluation times are uniform on
/// [0, time_horizon].
struct SamplerSpec {
    std::size_t n_modes = 8;
    double scale_min = 0.2;
    double scale_max = 2.0;
    double time_horizon = 1.0;
    std::size_t strata = 16;

    void validate() const {
        if (n_modes < 1) throw std::invalid_argument("SamplerSpec: n_modes must be >= 1");
        if (!(scale_min > 0.0) || !(scale_max >= scale_min))
            throw std::invalid_argument("SamplerSpec: need 0 < scale_min <= scale_max");
        if (!(time_horizon >= 0.0)) throw std::invalid_argument("SamplerSpec: negative horizon");
    }

    Vec draw_state(const GalerkinSpace& space, class GaussianStream& g, double scale) const;
};

}  // namespace sldp
