#include "obcov/linalg.hpp"

#include "obcov/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace obcov {

namespace {

constexpr double kCholeskyPivotTol = 1e-12;
constexpr double kJacobiTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::ShapeMismatch,
                    std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

Matrix elementwise(const Matrix& a, const Matrix& b, const char* op, auto fn) {
    require_same_shape(a, b, op);
    Matrix c(a.rows(), a.cols());
    auto ad = a.data();
    auto bd = b.data();
    auto cd = c.data();
    for (std::size_t k = 0; k < cd.size(); ++k) cd[k] = fn(ad[k], bd[k]);
    return c;
}

double off_diagonal_fro(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// A^T A with the upper triangle mirrored so the result is exactly symmetric.
SymMatrix gram(const Matrix& a) {
    const std::size_t n = a.cols();
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * a(k, j);
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return SymMatrix(std::move(g));
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(Errc::ShapeMismatch, "matrix data length " + std::to_string(data_.size()) + " != " +
                                             std::to_string(rows_) + "*" + std::to_string(cols_));
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }))
        throw Error(Errc::NonFinite, "matrix contains NaN or Inf");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double value) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::is_symmetric() const noexcept {
    if (!is_square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    return elementwise(a, b, "operator+", std::plus<>{});
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    return elementwise(a, b, "operator-", std::minus<>{});
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(Errc::ShapeMismatch, "matmul inner dimensions " + std::to_string(a.cols()) + " vs " +
                                             std::to_string(b.rows()));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (!m_.is_symmetric()) {
        throw Error(Errc::NotSymmetric, "matrix " + std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()) +
                                            " is not exactly symmetric");
    }
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
    if (!m.is_square()) throw Error(Errc::ShapeMismatch, "symmetrize needs a square matrix");
    const std::size_t n = m.rows();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        s(i, i) = m(i, i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return SymMatrix(std::move(s));
}

double SymMatrix::trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
    return t;
}

Matrix cholesky(const SymMatrix& a) {
    const std::size_t n = a.dim();
    const double tol = kCholeskyPivotTol * max_norm(a.matrix());
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > tol)) {
            throw Error(Errc::NotPositiveDefinite,
                        "pivot " + std::to_string(j) + " is " + std::to_string(d));
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

std::vector<double> sym_eigvals(const SymMatrix& a) {
    const std::size_t n = a.dim();
    Matrix m = a.matrix();
    const double target = kJacobiTol * fro_norm(m);

    int sweep = 0;
    while (off_diagonal_fro(m) > target) {
        if (++sweep > kJacobiMaxSweeps)
            throw Error(Errc::NoConvergence, "Jacobi did not converge in 100 sweeps");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double app = m(p, p);
                const double aqq = m(q, q);
                // Rotation angle chosen to annihilate m(p,q); the smaller
                // root of t^2 + 2 theta t - 1 = 0 keeps |angle| <= pi/4.
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                m(p, p) = app - t * apq;
                m(q, q) = aqq + t * apq;
                m(p, q) = 0.0;
                m(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = m(r, p);
                    const double arq = m(r, q);
                    const double new_rp = arp - s * (arq + tau * arp);
                    const double new_rq = arq + s * (arp - tau * arq);
                    m(r, p) = new_rp;
                    m(p, r) = new_rp;
                    m(r, q) = new_rq;
                    m(q, r) = new_rq;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>{});
    return eig;
}

namespace {

// For an exactly rank-one A = u v^T, ||A|| = ||u|| ||v||. Returns a negative
// value when A is not rank one in exact arithmetic.
double rank_one_norm(const Matrix& a) {
    std::size_t r = 0, c = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > std::abs(a(r, c))) r = i, c = j;
    const double pivot = a(r, c);
    if (pivot == 0.0) return 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) * pivot != a(i, c) * a(r, j)) return -1.0;
    double col = 0.0, row = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) col += a(i, c) * a(i, c);
    for (std::size_t j = 0; j < a.cols(); ++j) row += a(r, j) * a(r, j);
    return std::sqrt(col * row) / std::abs(pivot);
}

} // namespace

double op_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    if (const double r1 = rank_one_norm(a); r1 >= 0.0) return r1;
    if (a.is_symmetric()) {
        const auto eig = sym_eigvals(SymMatrix(a));
        return std::max(std::abs(eig.front()), std::abs(eig.back()));
    }
    const auto eig = sym_eigvals(gram(a));
    return std::sqrt(std::max(eig.front(), 0.0));
}

double fro_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_norm(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double col_norm_1to2(const Matrix& a) {
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    return elementwise(a, b, "hadamard", std::multiplies<>{});
}

double effective_rank(const SymMatrix& a) {
    const double norm = op_norm(a);
    if (norm == 0.0) return 0.0;
    return a.trace() / norm;
}

} // namespace obcov
