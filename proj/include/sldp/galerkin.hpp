#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sldp/la.hpp"
#include "sldp/solver.hpp"

namespace sldp {

enum class SpaceTag { H, V, Vstar };

/// Dimension + space annotation carried by vectors crossing module borders.
struct GelfandIndex {
    std::size_t dim_v = 0;
    SpaceTag tag = SpaceTag::H;
};

/// V-norm realized by the discrete space: W_0^{1,p} gradient seminorm,
/// L^{r+1} norm, or plain Euclidean (calibration instruments).
struct VNormKind {
    enum class Kind { W1p, Lr1, Euclidean };
    Kind kind = Kind::W1p;
    double param = 2.0;  // p for W1p, r for Lr1

    static VNormKind w1p(double p) { return {Kind::W1p, p}; }
    static VNormKind lr1(double r) { return {Kind::Lr1, r}; }
    static VNormKind euclidean() { return {Kind::Euclidean, 2.0}; }
};

/// Pivot-space realization: L^2 nodal mass inner product, the dual of
/// D(sqrt(-L)) via a Poisson solve, or Euclidean.
enum class HKind { L2, DualH1, Euclidean };

/// Discrete realization of the Gelfand triple V c H c V* on piecewise-linear
/// finite elements over (0,1) with homogeneous Dirichlet boundary. Dual
/// vectors f represent functionals through the plain coordinate pairing
/// f . w; the H-embedding of a state u is the assembled vector with
/// pairing(embed_h(u), w) = h_inner(u, w).
///
/// Immutable after construction and shareable across workers.
class GalerkinSpace {
public:
    static std::shared_ptr<const GalerkinSpace> unit_interval(std::size_t n_dof, VNormKind v_norm, HKind h_kind);
    /// Degenerate instrument space: R^n with identity mass, V = H = V*.
    /// Used by the scalar/diagonal additive calibration models.
    static std::shared_ptr<const GalerkinSpace> euclidean(std::size_t n);

    std::size_t dim() const { return n_dof_; }
    GelfandIndex index(SpaceTag tag) const { return GelfandIndex{n_dof_, tag}; }
    bool is_euclidean() const { return h_kind_ == HKind::Euclidean; }
    double mesh_width() const { return h_; }
    const Vec& nodes() const { return nodes_; }
    VNormKind v_norm_kind() const { return v_norm_; }
    HKind h_kind() const { return h_kind_; }

    const TriDiag& mass_matrix() const { return mass_; }
    const TriDiag& stiffness_matrix() const { return stiffness_; }

    Vec mass_apply(const Vec& u) const;
    Vec mass_solve(const Vec& f) const;
    Vec stiff_apply(const Vec& u) const;
    Vec stiff_solve(const Vec& f) const;

    double h_inner(const Vec& u, const Vec& v) const;
    double h_norm(const Vec& v) const;
    double v_norm(const Vec& v) const;
    /// Discrete dual norm sup_w pairing(f, w)/||w||_V, evaluated exactly via
    /// the Riesz-type representer of the dual problem (a linear solve for
    /// p = 2, a monotone nonlinear solve otherwise).
    double vstar_norm(const Vec& f) const;

    Vec embed_h(const Vec& u) const;
    /// H-representer of a dual vector: h_inner(riesz_solve(f), w) = f . w.
    Vec riesz_solve(const Vec& f) const;
    /// Inverse of riesz_solve.
    Vec riesz_apply(const Vec& u) const;
    /// Dense Riesz matrix of the DualH1 pivot space (M S^{-1} M), cached.
    const DenseMatrix& riesz_dense() const;

    /// Nodal values to per-cell gradients (n_dof + 1 cells, Dirichlet ends).
    Vec cell_gradients(const Vec& u) const;

    /// Assembled load with 3-point Gauss per cell:
    ///   load_i = sum_cells int a(x,u,u') phi_i + b(x,u,u') phi_i' dx.
    /// Exact for the polynomial nonlinearities used by the bundled models.
    using Integrand = std::function<void(double x, double u, double ux, double& a, double& b)>;
    Vec load(const Vec& u, const Integrand& f, double t = 0.0) const;

    /// Tridiagonal Jacobian of load() w.r.t. nodal values; the callback fills
    /// the four partials of (a, b) at a quadrature point.
    using IntegrandDerivative =
        std::function<void(double x, double u, double ux, double& a_u, double& a_ux, double& b_u, double& b_ux)>;
    TriDiag load_jacobian(const Vec& u, const IntegrandDerivative& df) const;

    /// Nodal interpolation of a scalar function on the grid.
    Vec interpolate(const std::function<double(double)>& f) const;

    /// k-th discrete Dirichlet sine mode, normalized in the pivot H-norm.
    Vec sine_mode(std::size_t k) const;
    /// Generalized eigenvalue of (stiffness, mass) for that mode.
    double sine_eigenvalue(std::size_t k) const;

    /// L^q(0,1) norm of the interpolant by cell quadrature.
    double lq_norm(const Vec& u, double q) const;

private:
    GalerkinSpace() = default;
    void require_dim(const Vec& v, const char* where) const;

    std::size_t n_dof_ = 0;
    double h_ = 0.0;
    Vec nodes_;
    VNormKind v_norm_;
    HKind h_kind_ = HKind::L2;

    TriDiag mass_, stiffness_;
    TriDiagLU mass_lu_, stiffness_lu_;
    mutable std::optional<DenseMatrix> riesz_dense_;
    mutable std::optional<DenseLU> riesz_lu_;

    // reference-cell quadrature
    static constexpr int kQuad = 3;
    double qpoint_[kQuad] = {0, 0, 0};
    double qweight_[kQuad] = {0, 0, 0};
};

}  // namespace sldp
