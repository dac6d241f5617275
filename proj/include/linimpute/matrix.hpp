#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace linimpute {

/// Thrown when a factorization or linear solve meets a numerically singular
/// (or indefinite) matrix. The pivot threshold is scale-aware, so callers get
/// a deterministic failure instead of garbage coefficients.
class SingularMatrixError : public std::runtime_error {
  public:
    explicit SingularMatrixError(const std::string& what)
        : std::runtime_error(what) {}
};

/// Dense row-major matrix of doubles. Sized once at construction.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        return data_[r * cols_ + c];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("multiply: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = a(i, j);
    return out;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

/// X^T X for a tall matrix, accumulated column-by-column.
inline Matrix gram(const Matrix& x) {
    Matrix g(x.cols(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t i = 0; i < x.cols(); ++i) {
            const double xi = x(r, i);
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < x.cols(); ++j)
                g(i, j) += xi * x(r, j);
        }
    return g;
}

/// Lower-triangular Cholesky factor L with L L^T = s.
///
/// Requires s symmetric (checked within 1e-10 relative to its largest entry)
/// and positive definite; a pivot at or below the scale-aware tolerance
/// raises SingularMatrixError.
inline Matrix cholesky(const Matrix& s) {
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n)
        throw std::invalid_argument("cholesky: matrix must be square and non-empty");
    const double scale = std::max(1.0, max_abs(s));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale)
                throw std::invalid_argument("cholesky: matrix is not symmetric");

    const double tol = 1e-12 * scale;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = s(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > tol))
            throw SingularMatrixError(
                "cholesky: matrix not positive definite (pivot " +
                std::to_string(diag) + " at index " + std::to_string(j) + ")");
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = s(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / ljj;
        }
    }
    return l;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than 1e-12 * max|A| declares the system singular.
inline std::vector<double> solve_linear_system(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n)
        throw std::invalid_argument("solve_linear_system: matrix must be square and non-empty");
    if (b.size() != n)
        throw std::invalid_argument("solve_linear_system: rhs size mismatch");

    const double tol = 1e-12 * std::max(1e-300, max_abs(a));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) <= tol)
            throw SingularMatrixError("solve_linear_system: singular matrix (pivot column " +
                                      std::to_string(col) + ")");
        if (pivot != col) {
            for (std::size_t c = col; c < n; ++c) std::swap(a(col, c), a(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) * inv;
            if (f == 0.0) continue;
            a(r, col) = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double v = b[i];
        for (std::size_t j = i + 1; j < n; ++j) v -= a(i, j) * x[j];
        x[i] = v / a(i, i);
    }
    return x;
}

/// Least squares via the normal equations: minimizes
/// ||X b - y||^2 + lambda * ||b_non_intercept||^2.
///
/// The final column of X is treated as the intercept column and is excluded
/// from the ridge penalty. With lambda = 0 a rank-deficient X^T X raises
/// SingularMatrixError.
inline std::vector<double> least_squares(const Matrix& x,
                                         const std::vector<double>& y,
                                         double lambda = 0.0) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n == 0 || p == 0)
        throw std::invalid_argument("least_squares: empty problem");
    if (y.size() != n)
        throw std::invalid_argument("least_squares: target size mismatch");
    if (lambda < 0.0)
        throw std::invalid_argument("least_squares: lambda must be >= 0");

    Matrix g = gram(x);
    for (std::size_t j = 0; j + 1 < p; ++j) g(j, j) += lambda;
    std::vector<double> rhs(p, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < p; ++j) rhs[j] += x(r, j) * y[r];

    try {
        return solve_linear_system(std::move(g), std::move(rhs));
    } catch (const SingularMatrixError&) {
        throw SingularMatrixError("least_squares: singular normal equations (lambda = " +
                                  std::to_string(lambda) + ")");
    }
}

} // namespace linimpute
