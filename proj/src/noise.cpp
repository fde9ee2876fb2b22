#include "sldp/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "sldp/rng.hpp"

namespace sldp {

NoiseStream sample_stream(std::size_t m, double dt, std::size_t n_steps, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_stream: m must be >= 1");
    if (dt <= 0.0) throw std::invalid_argument("sample_stream: dt must be positive");
    NoiseStream s;
    s.m = m;
    s.dt = dt;
    s.n_steps = n_steps;
    s.seed = seed;
    s.regenerable = true;
    s.increments.resize(n_steps * m);
    GaussianStream g(seed);
    const double sd = std::sqrt(dt);
    for (double& x : s.increments) x = sd * g.next();
    return s;
}

NoiseStream coarsen_stream(const NoiseStream& fine) {
    if (fine.n_steps % 2 != 0) throw std::invalid_argument("coarsen_stream: n_steps must be even");
    NoiseStream c;
    c.m = fine.m;
    c.dt = 2.0 * fine.dt;
    c.n_steps = fine.n_steps / 2;
    c.seed = fine.seed;
    c.regenerable = false;
    c.increments.resize(c.n_steps * c.m);
    for (std::size_t k = 0; k < c.n_steps; ++k)
        for (std::size_t j = 0; j < c.m; ++j)
            c.increments[k * c.m + j] =
                fine.increments[(2 * k) * fine.m + j] + fine.increments[(2 * k + 1) * fine.m + j];
    return c;
}

NoiseStream scaled_stream(const NoiseStream& s, double factor, double new_dt) {
    NoiseStream r = s;
    r.dt = new_dt;
    r.regenerable = false;
    for (double& x : r.increments) x *= factor;
    return r;
}

DiffusionSpec DiffusionSpec::zero(std::shared_ptr<const GalerkinSpace> space) {
    DiffusionSpec b;
    b.space_ = std::move(space);
    b.m_ = 0;
    return b;
}

DiffusionSpec DiffusionSpec::additive(std::shared_ptr<const GalerkinSpace> space, Vec amplitudes) {
    if (amplitudes.empty()) throw std::invalid_argument("DiffusionSpec::additive: empty amplitude list");
    DiffusionSpec b;
    b.kind_ = Kind::AdditiveTraceClass;
    b.m_ = amplitudes.size();
    b.space_ = std::move(space);
    b.amplitudes_ = std::move(amplitudes);
    if (!b.space_->is_euclidean()) {
        const double lead = std::abs(b.amplitudes_[0]);
        for (std::size_t k = 0; k < b.m_; ++k) {
            const double bound = lead / static_cast<double>((k + 1) * (k + 1));
            if (std::abs(b.amplitudes_[k]) > bound * (1.0 + 1e-12))
                throw std::invalid_argument("DiffusionSpec::additive: amplitudes must decay at least like k^-2");
        }
    }
    b.columns_.reserve(b.m_);
    for (std::size_t k = 0; k < b.m_; ++k) {
        Vec col = b.space_->sine_mode(k + 1);
        for (double& x : col) x *= b.amplitudes_[k];
        b.columns_.push_back(std::move(col));
    }
    b.amplitude_ = std::abs(b.amplitudes_[0]);
    b.lipschitz_ = 0.0;
    return b;
}

DiffusionSpec DiffusionSpec::multiplicative_sine(std::shared_ptr<const GalerkinSpace> space, std::size_t m,
                                                 double amplitude) {
    if (m < 1) throw std::invalid_argument("DiffusionSpec::multiplicative_sine: m must be >= 1");
    if (space->is_euclidean())
        throw std::invalid_argument("DiffusionSpec::multiplicative_sine: needs a PDE space");
    DiffusionSpec b;
    b.kind_ = Kind::LinearMultiplicative;
    b.m_ = m;
    b.space_ = std::move(space);
    b.amplitude_ = amplitude;
    b.weights_.reserve(m);
    constexpr double kPi = 3.14159265358979323846264338327950288;
    double max_w = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        const double scale = amplitude / static_cast<double>(k * k);
        Vec w = b.space_->interpolate([k, scale](double x) { return scale * std::sin(static_cast<double>(k) * kPi * x); });
        max_w = std::max(max_w, linf(w));
        b.weights_.push_back(std::move(w));
    }
    b.lipschitz_ = max_w * std::sqrt(static_cast<double>(m));
    return b;
}

DiffusionSpec DiffusionSpec::multiplicative_weights(std::shared_ptr<const GalerkinSpace> space,
                                                    std::vector<Vec> weights) {
    if (weights.empty()) throw std::invalid_argument("DiffusionSpec::multiplicative_weights: empty weight list");
    DiffusionSpec b;
    b.kind_ = Kind::LinearMultiplicative;
    b.m_ = weights.size();
    b.space_ = std::move(space);
    double max_w = 0.0;
    for (const auto& w : weights) {
        if (w.size() != b.space_->dim())
            throw std::invalid_argument("DiffusionSpec::multiplicative_weights: weight dimension mismatch");
        max_w = std::max(max_w, linf(w));
    }
    b.amplitude_ = max_w;
    b.weights_ = std::move(weights);
    b.lipschitz_ = max_w * std::sqrt(static_cast<double>(b.m_));
    return b;
}

Vec DiffusionSpec::apply(const Vec& v, const double* xi) const {
    Vec out(space_->dim(), 0.0);
    apply_into(v, xi, 1.0, out);
    return out;
}

void DiffusionSpec::apply_into(const Vec& v, const double* xi, double scale, Vec& out) const {
    const std::size_t n = space_->dim();
    if (v.size() != n) throw std::invalid_argument("DiffusionSpec::apply: state dimension mismatch");
    out.assign(n, 0.0);
    if (m_ == 0) return;
    if (kind_ == Kind::AdditiveTraceClass) {
        for (std::size_t k = 0; k < m_; ++k) {
            const double c = scale * xi[k];
            if (c == 0.0) continue;
            const Vec& col = columns_[k];
            for (std::size_t i = 0; i < n; ++i) out[i] += c * col[i];
        }
    } else {
        for (std::size_t k = 0; k < m_; ++k) {
            const double c = scale * xi[k];
            if (c == 0.0) continue;
            const Vec& w = weights_[k];
            for (std::size_t i = 0; i < n; ++i) out[i] += c * w[i] * v[i];
        }
    }
}

Vec DiffusionSpec::column(const Vec& v, std::size_t k) const {
    if (k >= m_) throw std::invalid_argument("DiffusionSpec::column: index out of range");
    if (kind_ == Kind::AdditiveTraceClass) return columns_[k];
    const std::size_t n = space_->dim();
    if (v.size() != n) throw std::invalid_argument("DiffusionSpec::column: state dimension mismatch");
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = weights_[k][i] * v[i];
    return out;
}

std::string DiffusionSpec::kind_string() const {
    if (m_ == 0) return "zero";
    return kind_ == Kind::AdditiveTraceClass ? "additive_trace_class" : "linear_multiplicative";
}

double hs_norm(const DiffusionSpec& b, const Vec& v, SpaceTag target) {
    if (target == SpaceTag::Vstar) throw std::invalid_argument("hs_norm: target must be H or V");
    if (!all_finite(v)) throw std::invalid_argument("hs_norm: non-finite state");
    double s = 0.0;
    for (std::size_t k = 0; k < b.m(); ++k) {
        const Vec col = b.column(v, k);
        const double nk = (target == SpaceTag::H) ? b.space().h_norm(col) : b.space().v_norm(col);
        s += nk * nk;
    }
    return std::sqrt(s);
}

}  // namespace sldp
