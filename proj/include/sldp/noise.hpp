#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sldp/galerkin.hpp"
#include "sldp/la.hpp"

namespace sldp {

/// Truncated cylindrical Wiener increments: n_steps x m table of centered
/// Gaussians with variance dt per coordinate. Bit-identical regeneration from
/// (m, dt, n_steps, seed) is part of the contract; `regenerable` is false for
/// derived tables (scaled/coarsened) that did not come out of sample_stream.
struct NoiseStream {
    std::size_t m = 0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    bool regenerable = false;
    std::vector<double> increments;  // row-major [step * m + k]

    const double* row(std::size_t step) const { return increments.data() + step * m; }
};

NoiseStream sample_stream(std::size_t m, double dt, std::size_t n_steps, std::uint64_t seed);

/// Same Brownian path viewed at twice the resolution: adjacent fine
/// increments summed pairwise. Used for strong-convergence ladders.
NoiseStream coarsen_stream(const NoiseStream& fine);

/// Increment table scaled by a constant factor with a relabeled step size
/// (the small-time rescaling identity feeds sqrt(eps)-scaled increments to an
/// eps = 1 run at step eps * dt).
NoiseStream scaled_stream(const NoiseStream& s, double factor, double new_dt);

/// Diffusion operator B with the truncated-noise bounds: additive trace-class
/// columns sigma_k phi_k (phi_k the discrete Dirichlet sine modes, H-normalized)
/// or linear multiplicative columns w_k . v (nodal product with fixed smooth
/// weights, interpolated back to the discrete space).
class DiffusionSpec {
public:
    enum class Kind { AdditiveTraceClass, LinearMultiplicative };

    DiffusionSpec() = default;  // unbound; factories produce usable specs

    static DiffusionSpec zero(std::shared_ptr<const GalerkinSpace> space);
    /// sigma_k amplitudes on sine modes; enforces at least k^{-2} decay on
    /// PDE spaces (trace-class surrogate).
    static DiffusionSpec additive(std::shared_ptr<const GalerkinSpace> space, Vec amplitudes);
    /// w_k(x) = amplitude * k^{-2} * sin(k pi x), interpolated on the grid.
    static DiffusionSpec multiplicative_sine(std::shared_ptr<const GalerkinSpace> space, std::size_t m,
                                             double amplitude);
    /// Linear multiplicative diffusion with caller-supplied nodal weights.
    static DiffusionSpec multiplicative_weights(std::shared_ptr<const GalerkinSpace> space,
                                                std::vector<Vec> weights);

    Kind kind() const { return kind_; }
    std::size_t m() const { return m_; }
    bool is_zero() const { return m_ == 0; }
    double amplitude() const { return amplitude_; }
    const Vec& amplitudes() const { return amplitudes_; }

    /// B(v) xi, linear in xi. Additive columns ignore v.
    Vec apply(const Vec& v, const double* xi) const;
    void apply_into(const Vec& v, const double* xi, double scale, Vec& out) const;

    /// k-th column B(v) u_k as an H-state.
    Vec column(const Vec& v, std::size_t k) const;

    /// Declared H -> HS(U,H) Lipschitz bound (0 for additive kinds).
    double lipschitz_bound() const { return lipschitz_; }

    const GalerkinSpace& space() const {
        if (!space_) throw std::logic_error("DiffusionSpec: no space bound");
        return *space_;
    }
    std::string kind_string() const;

private:
    Kind kind_ = Kind::AdditiveTraceClass;
    std::size_t m_ = 0;
    double amplitude_ = 0.0;
    double lipschitz_ = 0.0;
    std::shared_ptr<const GalerkinSpace> space_;
    std::vector<Vec> columns_;  // additive: sigma_k phi_k
    std::vector<Vec> weights_;  // multiplicative: nodal weights
    Vec amplitudes_;
};

/// Hilbert-Schmidt norm of B(v) into the requested target space
/// (finite-dimensional stand-in for the gamma-radonifying norm when the
/// target is V).
double hs_norm(const DiffusionSpec& b, const Vec& v, SpaceTag target);

}  // namespace sldp
