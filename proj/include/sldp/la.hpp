#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sldp {

using Vec = std::vector<double>;

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
    check_same_dim(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
    return r;
}

inline Vec add(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "add");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "sub");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline double linf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Tridiagonal matrix with LU factorization (partial pivoting, dgttrf-style).
/// Pivoting keeps the solve stable for the nonsymmetric Jacobians that show up
/// with convection terms.
class TriDiag {
public:
    TriDiag() = default;
    explicit TriDiag(std::size_t n) : n_(n), lower_(n, 0.0), diag_(n, 0.0), upper_(n, 0.0) {}

    std::size_t size() const { return n_; }

    double& lower(std::size_t i) { return lower_[i]; }  // A(i, i-1), i >= 1
    double& diag(std::size_t i) { return diag_[i]; }
    double& upper(std::size_t i) { return upper_[i]; }  // A(i, i+1), i <= n-2
    double lower(std::size_t i) const { return lower_[i]; }
    double diag(std::size_t i) const { return diag_[i]; }
    double upper(std::size_t i) const { return upper_[i]; }

    Vec apply(const Vec& x) const;

    /// y := alpha*A + beta*B must share the dimension.
    static TriDiag combine(double alpha, const TriDiag& a, double beta, const TriDiag& b);

    void add_scaled(double alpha, const TriDiag& other);
    void scale(double alpha);

private:
    std::size_t n_ = 0;
    Vec lower_, diag_, upper_;
};

class TriDiagLU {
public:
    TriDiagLU() = default;
    explicit TriDiagLU(const TriDiag& a);

    bool ok() const { return ok_; }
    /// Smallest |pivot| seen during elimination; zero when singular.
    double min_pivot() const { return min_pivot_; }
    Vec solve(const Vec& rhs) const;

private:
    std::size_t n_ = 0;
    Vec dl_, d_, du_, du2_;
    std::vector<int> ipiv_;
    bool ok_ = false;
    double min_pivot_ = 0.0;
};

/// Small dense matrix, row-major, with partial-pivot LU. Used for the
/// nonlocal Jacobians of the H^{-1} triple; dimensions stay modest there.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vec apply(const Vec& x) const;
    void add_tridiag(double alpha, const TriDiag& t);
    void scale(double alpha);

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec data_;
};

class DenseLU {
public:
    DenseLU() = default;
    explicit DenseLU(DenseMatrix a);

    bool ok() const { return ok_; }
    Vec solve(const Vec& rhs) const;

private:
    std::size_t n_ = 0;
    Vec lu_;
    std::vector<int> perm_;
    bool ok_ = false;
};

}  // namespace sldp
