#include "sldp/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sldp/noise.hpp"
#include "sldp/parallel.hpp"
#include "sldp/rng.hpp"

namespace sldp {

namespace {

constexpr double kA1Tol = 1e-6;     // relative secant defect
constexpr double kHeadroom = 1.10;  // freeze fitted constants with 10% slack

struct SampleData {
    bool failed = false;
    std::string fail_note;

    double a1_defect = 0.0;
    double a2_lhs = 0.0;
    double a2_dv_alpha = 0.0;
    double a2_dh2 = 0.0;
    double a2_rho2 = 0.0;  // rho(v2): full value, or the shape when fitted
    double a3_ratio = 0.0;
    double bg_ratio = 0.0;
    double bl_ratio = 0.0;
    double co_ratio = 0.0;
};

double rel_slack(double a, double b) { return 1e-8 * (1.0 + std::abs(a) + std::abs(b)); }

SampleData evaluate_sample(const ModelSpec& model, const SamplerSpec& sampler, std::uint64_t seed, std::size_t i) {
    SampleData out;
    const GalerkinSpace& space = *model.space;
    Xoshiro256pp uni(derive_seed(seed, 2 * i));
    GaussianStream gauss(derive_seed(seed, 2 * i + 1));

    const auto draw_scale = [&](std::size_t strata_shift) {
        const double u = (static_cast<double>((i + strata_shift) % sampler.strata) + uni.uniform_open()) /
                         static_cast<double>(sampler.strata);
        return sampler.scale_min * std::pow(sampler.scale_max / sampler.scale_min, u);
    };

    try {
        const Vec v1 = sampler.draw_state(space, gauss, draw_scale(0));
        const Vec v2 = sampler.draw_state(space, gauss, draw_scale(5));
        const Vec v3 = sampler.draw_state(space, gauss, draw_scale(11));
        const double t = sampler.time_horizon * uni.uniform_open();

        const Vec d = sub(v1, v2);
        const double dh = space.h_norm(d);
        const double dv = space.v_norm(d);
        const double alpha = model.assumptions.alpha;
        const double beta = model.assumptions.beta;

        if (model.has_drift()) {
            // A1: secant continuity along a sampled ray.
            const double s0 = 2.0 * uni.uniform_open() - 1.0;
            const double h = 1e-5;
            const auto phi = [&](double s) {
                Vec arg = v1;
                axpy(s, v2, arg);
                return pairing(model.drift_load(t, arg), v3);
            };
            const double p0 = phi(s0);
            const double pm = phi(s0 - h);
            const double pp = phi(s0 + h);
            out.a1_defect = std::abs(p0 - 0.5 * (pm + pp)) / (1.0 + std::abs(p0) + std::abs(pp - pm));

            const Vec a1 = model.drift_load(t, v1);
            const Vec a2 = model.drift_load(t, v2);
            out.a2_lhs = 2.0 * pairing(sub(a1, a2), d);
            out.a2_dv_alpha = std::pow(dv, alpha);
            out.a2_dh2 = dh * dh;
            out.a2_rho2 = model.rho_value(v2);

            const double vstar = space.vstar_norm(a1);
            const double nv1 = space.v_norm(v1);
            const double nh1 = space.h_norm(v1);
            const double growth = (1.0 + std::pow(nv1, alpha)) * (1.0 + std::pow(nh1, beta));
            out.a3_ratio = std::pow(vstar, alpha / (alpha - 1.0)) / growth;

            const double hs_h = hs_norm(model.diffusion, v1, SpaceTag::H);
            out.co_ratio = (pairing(a1, v1) + hs_h * hs_h + 0.5 * model.assumptions.eta * std::pow(nv1, alpha)) /
                           (1.0 + nh1 * nh1);
        }

        if (!model.diffusion.is_zero()) {
            const double hs_v = hs_norm(model.diffusion, v1, SpaceTag::V);
            const double nv1 = space.v_norm(v1);
            out.bg_ratio = (hs_v * hs_v) / (1.0 + nv1 * nv1);
            if (out.a2_dh2 == 0.0) out.a2_dh2 = dh * dh;
            double hs_diff = 0.0;
            for (std::size_t k = 0; k < model.diffusion.m(); ++k) {
                const Vec ck = sub(model.diffusion.column(v1, k), model.diffusion.column(v2, k));
                const double nk = space.h_norm(ck);
                hs_diff += nk * nk;
            }
            out.bl_ratio = (dh > 0.0) ? hs_diff / (dh * dh) : 0.0;
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.fail_note = e.what();
    }
    return out;
}

}  // namespace

AssumptionReport audit_assumptions(const ModelSpec& model, const SamplerSpec& sampler, std::size_t n,
                                   const AssumptionParams& params, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("audit_assumptions: n must be >= 1");
    sampler.validate();
    params.validate();

    std::vector<SampleData> samples(n);
    parallel_for(n, [&](std::size_t i) { samples[i] = evaluate_sample(model, sampler, seed, i); });

    AssumptionReport report;
    report.model_id = model.model_id;
    report.seed = seed;
    report.n_samples = n;

    const std::size_t pilot_end = n / 2;  // [0, pilot_end) fits, the rest validates
    const double eta = params.eta;
    const double big_k = params.big_k;

    for (std::size_t i = 0; i < n; ++i)
        if (samples[i].failed)
            report.violations.push_back({"evaluation", i, 0.0, 0.0, samples[i].fail_note});

    const auto fit_max_ratio = [&](auto&& ratio_of, std::size_t begin, std::size_t end) {
        double c = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            if (samples[i].failed) continue;
            c = std::max(c, ratio_of(samples[i]));
        }
        return c;
    };

    // A1: declared tolerance check on all samples.
    {
        ConditionSummary s;
        s.condition_id = condition::kA1;
        s.n_samples = n;
        s.worst_margin = -kA1Tol;
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i].failed) continue;
            const double defect = samples[i].a1_defect;
            s.fitted_constant = std::max(s.fitted_constant, defect);
            s.worst_margin = std::max(s.worst_margin, defect - kA1Tol);
            if (defect > kA1Tol) {
                report.violations.push_back({condition::kA1, i, defect, kA1Tol, "secant defect"});
                ++s.n_violations;
            }
        }
        report.conditions.push_back(s);
    }

    // A2, with the rho multiplier fitted on the pilot half when the model
    // declares only the shape.
    {
        double rho_coeff_frozen = 0.0;
        double rho_coeff_all = 0.0;
        if (model.rho_coefficient_fitted) {
            const auto needed = [&](const SampleData& sd) {
                const double denom = sd.a2_rho2 * sd.a2_dh2;
                if (denom <= 1e-300) return 0.0;
                return std::max(0.0, (sd.a2_lhs + eta * sd.a2_dv_alpha - big_k * sd.a2_dh2) / denom);
            };
            rho_coeff_frozen = fit_max_ratio(needed, 0, pilot_end);
            rho_coeff_all = std::max(rho_coeff_frozen, fit_max_ratio(needed, pilot_end, n));
        }

        ConditionSummary s;
        s.condition_id = condition::kA2;
        s.n_samples = n;
        double fitted_eta = std::numeric_limits<double>::infinity();
        s.worst_margin = -std::numeric_limits<double>::infinity();
        const std::size_t check_begin = model.rho_coefficient_fitted ? pilot_end : 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i].failed) continue;
            const SampleData& sd = samples[i];
            const double rho_term = model.rho_coefficient_fitted ? kHeadroom * rho_coeff_frozen * sd.a2_rho2 : sd.a2_rho2;
            const double rhs = -eta * sd.a2_dv_alpha + (big_k + rho_term) * sd.a2_dh2;
            if (sd.a2_dv_alpha > 1e-14) {
                const double rho_for_eta =
                    model.rho_coefficient_fitted ? rho_coeff_all * sd.a2_rho2 : sd.a2_rho2;
                fitted_eta = std::min(fitted_eta, ((big_k + rho_for_eta) * sd.a2_dh2 - sd.a2_lhs) / sd.a2_dv_alpha);
            }
            if (i < check_begin) continue;
            s.worst_margin = std::max(s.worst_margin, sd.a2_lhs - rhs);
            if (sd.a2_lhs > rhs + rel_slack(sd.a2_lhs, rhs)) {
                report.violations.push_back({condition::kA2, i, sd.a2_lhs, rhs, ""});
                ++s.n_violations;
            }
        }
        s.fitted_constant = std::isfinite(fitted_eta) ? fitted_eta : 0.0;
        report.conditions.push_back(s);

        if (model.rho_coefficient_fitted) {
            ConditionSummary sr;
            sr.condition_id = condition::kA2Rho;
            sr.n_samples = n;
            sr.fitted_constant = rho_coeff_all;
            sr.worst_margin = rho_coeff_all - kHeadroom * rho_coeff_frozen;
            report.conditions.push_back(sr);
        }
    }

    // Fitted-constant conditions: freeze on pilot, validate with headroom.
    struct FittedSpec {
        const char* id;
        double (*ratio)(const SampleData&);
    };
    const FittedSpec fitted_specs[] = {
        {condition::kA3, [](const SampleData& sd) { return sd.a3_ratio; }},
        {condition::kNoiseGrowth, [](const SampleData& sd) { return sd.bg_ratio; }},
        {condition::kCoercivity, [](const SampleData& sd) { return sd.co_ratio; }},
    };
    for (const auto& spec : fitted_specs) {
        ConditionSummary s;
        s.condition_id = spec.id;
        s.n_samples = n;
        const double frozen = fit_max_ratio([&](const SampleData& sd) { return spec.ratio(sd); }, 0, pilot_end);
        const double bound = kHeadroom * frozen;
        s.worst_margin = -std::numeric_limits<double>::infinity();
        double fitted_all = frozen;
        for (std::size_t i = pilot_end; i < n; ++i) {
            if (samples[i].failed) continue;
            const double r = spec.ratio(samples[i]);
            fitted_all = std::max(fitted_all, r);
            s.worst_margin = std::max(s.worst_margin, r - bound);
            if (r > bound + rel_slack(r, bound)) {
                report.violations.push_back({spec.id, i, r, bound, "exceeds frozen constant"});
                ++s.n_violations;
            }
        }
        s.fitted_constant = fitted_all;
        report.conditions.push_back(s);
    }

    // Noise Lipschitz bound: declared constant from the diffusion weights.
    {
        ConditionSummary s;
        s.condition_id = condition::kNoiseLipschitz;
        s.n_samples = n;
        const double lip = model.diffusion.lipschitz_bound();
        const double bound = lip * lip;
        s.worst_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i].failed) continue;
            const double r = samples[i].bl_ratio;
            s.fitted_constant = std::max(s.fitted_constant, r);
            s.worst_margin = std::max(s.worst_margin, r - bound);
            if (r > bound + rel_slack(r, bound)) {
                report.violations.push_back({condition::kNoiseLipschitz, i, r, bound, "exceeds declared L^2"});
                ++s.n_violations;
            }
        }
        report.conditions.push_back(s);
    }

    std::sort(report.violations.begin(), report.violations.end(),
              [](const Violation& a, const Violation& b) {
                  if (a.sample_index != b.sample_index) return a.sample_index < b.sample_index;
                  return a.condition_id < b.condition_id;
              });
    return report;
}

AssumptionReport audit_assumptions(const ModelSpec& model, const SamplerSpec& sampler, std::size_t n,
                                   std::uint64_t seed) {
    return audit_assumptions(model, sampler, n, model.assumptions, seed);
}

}  // namespace sldp
