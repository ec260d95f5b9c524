#ifndef BLINDEQ_NUMERICS_HPP
#define BLINDEQ_NUMERICS_HPP

/**
 * @file numerics.hpp
 * @brief Small dense complex linear algebra, partial-DFT columns, chi-square
 * special functions and the seeded random stream used by every other module.
 *
 * Matrix sizes in this project never exceed the channel length (L+1 <= 64)
 * except for the batch oracles, which work on at most N x N systems.
 */

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blindeq {

using cdouble = std::complex<double>;
using ComplexVector = std::vector<cdouble>;

/// Raised when a numeric routine cannot produce a trustworthy answer.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major dense complex matrix with explicit dimensions.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols, cdouble fill = {});

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(std::span<const double> entries);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    cdouble& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const cdouble& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<cdouble> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const cdouble> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const cdouble> values() const noexcept { return data_; }

    ComplexMatrix adjoint() const;

    bool operator==(const ComplexMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cdouble> data_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector operator*(const ComplexMatrix& a, std::span<const cdouble> x);

/// a^H b
cdouble inner(std::span<const cdouble> a, std::span<const cdouble> b);
double squared_norm(std::span<const cdouble> a);
/// Largest absolute row sum.
double max_row_sum(const ComplexMatrix& a);

/**
 * Factorization of a Hermitian positive-definite matrix.
 *
 * Cholesky is tried first. If a pivot is not strictly positive the matrix is
 * refactored as L D L^H with 1e-12 added to the diagonal, and
 * used_fallback() reports it.
 */
class HermitianSolver {
public:
    explicit HermitianSolver(const ComplexMatrix& a);

    ComplexVector solve(std::span<const cdouble> b) const;
    ComplexMatrix solve(const ComplexMatrix& b) const;
    ComplexMatrix inverse() const;

    std::size_t size() const noexcept { return factor_.rows(); }
    bool used_fallback() const noexcept { return fallback_; }

private:
    ComplexMatrix factor_;  // unit-lower L in the fallback, Cholesky L otherwise
    std::vector<double> pivots_;
    bool fallback_ = false;
};

/// General inverse by Gauss-Jordan with partial pivoting.
ComplexMatrix inverse(const ComplexMatrix& a);

/**
 * Squared residual of the least-squares fit of y onto the columns of b,
 * computed with Householder QR. Throws NumericError when b is numerically
 * rank deficient or has more columns than rows.
 */
double least_squares_residual(const ComplexMatrix& b, std::span<const cdouble> y);

/// Column i (1-based) of the partial DFT matrix A: entries exp(+j 2 pi (i-1) k / N), k = 0..L.
struct PartialDftColumn {
    std::size_t index = 0;
    ComplexVector entries;
};

PartialDftColumn dft_column(std::size_t i, std::size_t n, std::size_t l);

/// |a_i^H a_i'| by direct summation of the geometric series.
double column_correlation(std::size_t i, std::size_t i_prime, std::size_t n, std::size_t l);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

double chi_square_cdf(double r, unsigned dof);

/// r with P(chi2_dof > r) = epsilon, found by bisection on the tail.
double chi_square_quantile(double epsilon, unsigned dof);

/**
 * Deterministic generator keyed by (seed, stream id).
 *
 * Draws depend only on the key, so Monte-Carlo trials can run on any
 * thread in any order and still see the same numbers.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    double uniform();
    std::size_t uniform_index(std::size_t n);
    double gaussian();
    /// Circularly-symmetric CN(0, 1): variance 1/2 per real component.
    cdouble complex_gaussian();

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace blindeq

#endif  // BLINDEQ_NUMERICS_HPP
