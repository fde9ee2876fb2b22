#include "sldp/la.hpp"

#include <algorithm>
#include <limits>

namespace sldp {

Vec TriDiag::apply(const Vec& x) const {
    if (x.size() != n_) throw std::invalid_argument("TriDiag::apply: dimension mismatch");
    Vec y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = diag_[i] * x[i];
        if (i > 0) s += lower_[i] * x[i - 1];
        if (i + 1 < n_) s += upper_[i] * x[i + 1];
        y[i] = s;
    }
    return y;
}

TriDiag TriDiag::combine(double alpha, const TriDiag& a, double beta, const TriDiag& b) {
    if (a.size() != b.size()) throw std::invalid_argument("TriDiag::combine: dimension mismatch");
    TriDiag r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.lower_[i] = alpha * a.lower_[i] + beta * b.lower_[i];
        r.diag_[i] = alpha * a.diag_[i] + beta * b.diag_[i];
        r.upper_[i] = alpha * a.upper_[i] + beta * b.upper_[i];
    }
    return r;
}

void TriDiag::add_scaled(double alpha, const TriDiag& other) {
    if (other.size() != n_) throw std::invalid_argument("TriDiag::add_scaled: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
        lower_[i] += alpha * other.lower_[i];
        diag_[i] += alpha * other.diag_[i];
        upper_[i] += alpha * other.upper_[i];
    }
}

void TriDiag::scale(double alpha) {
    for (std::size_t i = 0; i < n_; ++i) {
        lower_[i] *= alpha;
        diag_[i] *= alpha;
        upper_[i] *= alpha;
    }
}

TriDiagLU::TriDiagLU(const TriDiag& a) : n_(a.size()) {
    dl_.resize(n_);
    d_.resize(n_);
    du_.resize(n_);
    du2_.assign(n_, 0.0);
    ipiv_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        dl_[i] = a.lower(i);
        d_[i] = a.diag(i);
        du_[i] = a.upper(i);
    }
    min_pivot_ = std::numeric_limits<double>::infinity();
    // LU with partial pivoting over adjacent rows (LAPACK dgttrf layout).
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        if (std::abs(d_[i]) >= std::abs(dl_[i + 1])) {
            ipiv_[i] = static_cast<int>(i);
            if (d_[i] == 0.0) {
                ok_ = false;
                min_pivot_ = 0.0;
                return;
            }
            const double fact = dl_[i + 1] / d_[i];
            dl_[i + 1] = fact;
            d_[i + 1] -= fact * du_[i];
            if (i + 2 < n_) du2_[i] = 0.0;
        } else {
            ipiv_[i] = static_cast<int>(i + 1);
            const double fact = d_[i] / dl_[i + 1];
            d_[i] = dl_[i + 1];
            dl_[i + 1] = fact;
            const double tmp = du_[i];
            du_[i] = d_[i + 1];
            d_[i + 1] = tmp - fact * d_[i + 1];
            if (i + 2 < n_) {
                du2_[i] = du_[i + 1];
                du_[i + 1] = -fact * du_[i + 1];
            }
        }
        min_pivot_ = std::min(min_pivot_, std::abs(d_[i]));
    }
    if (n_ > 0) {
        ipiv_[n_ - 1] = static_cast<int>(n_ - 1);
        min_pivot_ = std::min(min_pivot_, std::abs(d_[n_ - 1]));
    }
    ok_ = min_pivot_ > 0.0;
}

Vec TriDiagLU::solve(const Vec& rhs) const {
    if (!ok_) throw std::runtime_error("TriDiagLU::solve: singular factorization");
    if (rhs.size() != n_) throw std::invalid_argument("TriDiagLU::solve: dimension mismatch");
    Vec x = rhs;
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        if (ipiv_[i] == static_cast<int>(i)) {
            x[i + 1] -= dl_[i + 1] * x[i];
        } else {
            std::swap(x[i], x[i + 1]);
            x[i + 1] -= dl_[i + 1] * x[i];
        }
    }
    // Back substitution with the two superdiagonals produced by pivoting.
    for (std::size_t k = n_; k-- > 0;) {
        double s = x[k];
        if (k + 1 < n_) s -= du_[k] * x[k + 1];
        if (k + 2 < n_) s -= du2_[k] * x[k + 2];
        x[k] = s / d_[k];
    }
    return x;
}

Vec DenseMatrix::apply(const Vec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("DenseMatrix::apply: dimension mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        const double* row = &data_[i * cols_];
        for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

void DenseMatrix::add_tridiag(double alpha, const TriDiag& t) {
    if (t.size() != rows_ || rows_ != cols_) throw std::invalid_argument("DenseMatrix::add_tridiag: shape mismatch");
    for (std::size_t i = 0; i < rows_; ++i) {
        at(i, i) += alpha * t.diag(i);
        if (i > 0) at(i, i - 1) += alpha * t.lower(i);
        if (i + 1 < rows_) at(i, i + 1) += alpha * t.upper(i);
    }
}

void DenseMatrix::scale(double alpha) {
    for (double& v : data_) v *= alpha;
}

DenseLU::DenseLU(DenseMatrix a) : n_(a.rows()) {
    if (a.rows() != a.cols()) throw std::invalid_argument("DenseLU: matrix must be square");
    lu_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) lu_[i * n_ + j] = a.at(i, j);
    perm_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = static_cast<int>(i);
    ok_ = true;
    for (std::size_t k = 0; k < n_; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu_[k * n_ + k]);
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double v = std::abs(lu_[i * n_ + k]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0) {
            ok_ = false;
            return;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n_; ++j) std::swap(lu_[k * n_ + j], lu_[piv * n_ + j]);
            std::swap(perm_[k], perm_[piv]);
        }
        const double pivot = lu_[k * n_ + k];
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double f = lu_[i * n_ + k] / pivot;
            lu_[i * n_ + k] = f;
            for (std::size_t j = k + 1; j < n_; ++j) lu_[i * n_ + j] -= f * lu_[k * n_ + j];
        }
    }
}

Vec DenseLU::solve(const Vec& rhs) const {
    if (!ok_) throw std::runtime_error("DenseLU::solve: singular factorization");
    if (rhs.size() != n_) throw std::invalid_argument("DenseLU::solve: dimension mismatch");
    Vec x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = rhs[perm_[i]];
    for (std::size_t i = 1; i < n_; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu_[i * n_ + j] * x[j];
        x[i] = s;
    }
    for (std::size_t k = n_; k-- > 0;) {
        double s = x[k];
        for (std::size_t j = k + 1; j < n_; ++j) s -= lu_[k * n_ + j] * x[j];
        x[k] = s / lu_[k * n_ + k];
    }
    return x;
}

}  // namespace sldp
