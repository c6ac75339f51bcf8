#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace obcov {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    /// Zero-filled rows x cols matrix.
    Matrix(std::size_t rows, std::size_t cols);
    /// Takes ownership of row-major data; throws ShapeMismatch on a length
    /// mismatch and NonFinite on NaN/Inf entries.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix constant(std::size_t rows, std::size_t cols, double value);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }

    Matrix transpose() const;
    /// Exact symmetry check (no tolerance).
    bool is_symmetric() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// Square matrix with A(i,j) == A(j,i) bit-for-bit.
class SymMatrix {
public:
    SymMatrix() = default;
    /// Throws NotSymmetric unless `m` is square and exactly symmetric.
    explicit SymMatrix(Matrix m);

    /// (M + M^T) / 2 evaluated entrywise as 0.5 * (m_ij + m_ji), which is
    /// symmetric by construction.
    static SymMatrix symmetrize(const Matrix& m);
    static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

    std::size_t dim() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

    double trace() const noexcept;

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    Matrix m_;
};

/// Lower-triangular L with L L^T = A. Throws NotPositiveDefinite when a
/// pivot falls below 1e-12 * max|A|.
Matrix cholesky(const SymMatrix& a);

/// Eigenvalues in descending order, via cyclic Jacobi sweeps. Stops once the
/// off-diagonal Frobenius mass is at most 1e-12 * ||A||_F; throws
/// NoConvergence after 100 sweeps.
std::vector<double> sym_eigvals(const SymMatrix& a);

/// Largest singular value. Exactly rank-one inputs use ||u|| ||v||, other
/// symmetric inputs max |eigenvalue|, anything else the eigenvalues of A^T A.
double op_norm(const Matrix& a);
inline double op_norm(const SymMatrix& a) { return op_norm(a.matrix()); }

double fro_norm(const Matrix& a);
/// max_ij |A_ij|
double max_norm(const Matrix& a);
/// Largest Euclidean column norm.
double col_norm_1to2(const Matrix& a);

/// Entrywise product; ShapeMismatch on unequal shapes.
Matrix hadamard(const Matrix& a, const Matrix& b);

/// trace(A) / ||A||, zero for the zero matrix.
double effective_rank(const SymMatrix& a);

} // namespace obcov
