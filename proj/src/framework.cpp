#include "sldp/framework.hpp"

#include <nlohmann/json.hpp>

#include "sldp/rng.hpp"

namespace sldp {

double pairing(const Vec& f, const Vec& v) {
    check_same_dim(f, v, "pairing");
    return dot(f, v);
}

double norm(SpaceTag tag, const Vec& v, const GalerkinSpace& space) {
    if (!all_finite(v)) throw std::invalid_argument("norm: non-finite entries");
    switch (tag) {
        case SpaceTag::H:
            return space.h_norm(v);
        case SpaceTag::V:
            return space.v_norm(v);
        case SpaceTag::Vstar:
            return space.vstar_norm(v);
    }
    throw std::invalid_argument("norm: unknown space tag");
}

Vec embed_h(const Vec& u, const GalerkinSpace& space) { return space.embed_h(u); }

double AssumptionReport::fitted(const std::string& condition_id) const {
    for (const auto& c : conditions)
        if (c.condition_id == condition_id) return c.fitted_constant;
    throw std::out_of_range("AssumptionReport: no condition " + condition_id);
}

std::string AssumptionReport::to_json() const {
    nlohmann::ordered_json j;
    j["model_id"] = model_id;
    j["seed"] = seed;
    j["seed_rule"] = seed_rule_string();
    j["n_samples"] = n_samples;
    j["passed"] = passed();
    auto conds = nlohmann::ordered_json::array();
    for (const auto& c : conditions) {
        nlohmann::ordered_json jc;
        jc["condition_id"] = c.condition_id;
        jc["n_samples"] = c.n_samples;
        jc["n_violations"] = c.n_violations;
        jc["fitted_constant"] = c.fitted_constant;
        jc["worst_margin"] = c.worst_margin;
        conds.push_back(jc);
    }
    j["conditions"] = conds;
    auto viols = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
        nlohmann::ordered_json jv;
        jv["condition_id"] = v.condition_id;
        jv["sample_index"] = v.sample_index;
        jv["lhs"] = v.lhs;
        jv["rhs"] = v.rhs;
        if (!v.note.empty()) jv["note"] = v.note;
        viols.push_back(jv);
    }
    j["violations"] = viols;
    return j.dump(2);
}

Vec SamplerSpec::draw_state(const GalerkinSpace& space, GaussianStream& g, double scale) const {
    const std::size_t n = space.dim();
    Vec v(n, 0.0);
    const std::size_t modes = std::min(n_modes, n);
    for (std::size_t j = 1; j <= modes; ++j) {
        const double cj = scale * g.next() / static_cast<double>(j * j);
        const Vec mode = space.sine_mode(j);
        for (std::size_t i = 0; i < n; ++i) v[i] += cj * mode[i];
    }
    return v;
}

}  // namespace sldp
