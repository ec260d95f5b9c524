#include "blindeq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blindeq {

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, cdouble fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t k = 0; k < n; ++k) m(k, k) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> entries) {
    ComplexMatrix m(entries.size(), entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) m(k, k) = entries[k];
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: inner dimensions differ");
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cdouble s = a(r, k);
            if (s == cdouble{}) continue;
            for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += s * b(k, c);
        }
    }
    return out;
}

namespace {

ComplexMatrix elementwise(const ComplexMatrix& a, const ComplexMatrix& b, double sign) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("matrix sum: dimensions differ");
    ComplexMatrix out = a;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) += sign * b(r, c);
    return out;
}

}  // namespace

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) { return elementwise(a, b, 1.0); }
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) { return elementwise(a, b, -1.0); }

ComplexVector operator*(const ComplexMatrix& a, std::span<const cdouble> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector product: dimensions differ");
    ComplexVector out(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        cdouble acc{};
        const auto row = a.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

cdouble inner(std::span<const cdouble> a, std::span<const cdouble> b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner product: lengths differ");
    cdouble acc{};
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
    return acc;
}

double squared_norm(std::span<const cdouble> a) {
    double acc = 0.0;
    for (const auto& v : a) acc += std::norm(v);
    return acc;
}

double max_row_sum(const ComplexMatrix& a) {
    double best = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (const auto& v : a.row(r)) s += std::abs(v);
        best = std::max(best, s);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Hermitian solves
// ---------------------------------------------------------------------------

HermitianSolver::HermitianSolver(const ComplexMatrix& a) {
    if (!a.is_square()) throw std::invalid_argument("HermitianSolver: matrix must be square");
    const std::size_t n = a.rows();

    // Cholesky: a = L L^H, L stored in the lower triangle.
    factor_ = ComplexMatrix(n, n);
    pivots_.assign(n, 1.0);
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) {
        double d = a(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(factor_(j, k));
        if (!(d > 0.0)) {
            ok = false;
            break;
        }
        const double ljj = std::sqrt(d);
        factor_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cdouble s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= factor_(i, k) * std::conj(factor_(j, k));
            factor_(i, j) = s / ljj;
        }
    }
    if (ok) return;

    // L D L^H on a + jitter*I with unit-lower L.
    constexpr double jitter = 1e-12;
    fallback_ = true;
    factor_ = ComplexMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real() + jitter;
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(factor_(j, k)) * pivots_[k];
        if (d == 0.0 || !std::isfinite(d)) throw NumericError("HermitianSolver: singular matrix");
        pivots_[j] = d;
        factor_(j, j) = 1.0;
        for (std::size_t i = j + 1; i < n; ++i) {
            cdouble s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= factor_(i, k) * std::conj(factor_(j, k)) * pivots_[k];
            factor_(i, j) = s / d;
        }
    }
}

ComplexVector HermitianSolver::solve(std::span<const cdouble> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("HermitianSolver::solve: length mismatch");
    ComplexVector x(b.begin(), b.end());
    // Forward: L z = b.
    for (std::size_t i = 0; i < n; ++i) {
        cdouble s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= factor_(i, k) * x[k];
        x[i] = fallback_ ? s : s / factor_(i, i);
    }
    if (fallback_)
        for (std::size_t i = 0; i < n; ++i) x[i] /= pivots_[i];
    // Backward: L^H x = z.
    for (std::size_t ii = n; ii-- > 0;) {
        cdouble s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(factor_(k, ii)) * x[k];
        x[ii] = fallback_ ? s : s / std::conj(factor_(ii, ii));
    }
    return x;
}

ComplexMatrix HermitianSolver::solve(const ComplexMatrix& b) const {
    if (b.rows() != size()) throw std::invalid_argument("HermitianSolver::solve: row mismatch");
    ComplexMatrix out(b.rows(), b.cols());
    ComplexVector column(b.rows());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t r = 0; r < b.rows(); ++r) column[r] = b(r, c);
        const auto x = solve(column);
        for (std::size_t r = 0; r < b.rows(); ++r) out(r, c) = x[r];
    }
    return out;
}

ComplexMatrix HermitianSolver::inverse() const { return solve(ComplexMatrix::identity(size())); }

ComplexMatrix inverse(const ComplexMatrix& a) {
    if (!a.is_square()) throw std::invalid_argument("inverse: matrix must be square");
    const std::size_t n = a.rows();
    ComplexMatrix work = a;
    ComplexMatrix inv = ComplexMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
        if (work(pivot, col) == cdouble{}) throw NumericError("inverse: singular matrix");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work(pivot, c), work(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const cdouble scale = 1.0 / work(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            work(col, c) *= scale;
            inv(col, c) *= scale;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cdouble f = work(r, col);
            if (f == cdouble{}) continue;
            for (std::size_t c = 0; c < n; ++c) {
                work(r, c) -= f * work(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

double least_squares_residual(const ComplexMatrix& b, std::span<const cdouble> y) {
    const std::size_t m = b.rows();
    const std::size_t p = b.cols();
    if (y.size() != m) throw std::invalid_argument("least_squares_residual: length mismatch");
    if (p > m) throw NumericError("least_squares_residual: more regressors than observations");

    ComplexMatrix r = b;
    ComplexVector qy(y.begin(), y.end());
    double largest = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
        double col = 0.0;
        for (std::size_t i = 0; i < m; ++i) col += std::norm(b(i, c));
        largest = std::max(largest, std::sqrt(col));
    }

    ComplexVector v(m);
    for (std::size_t k = 0; k < p; ++k) {
        double xnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) xnorm2 += std::norm(r(i, k));
        const double xnorm = std::sqrt(xnorm2);
        if (xnorm <= 1e-12 * std::max(largest, 1e-300))
            throw NumericError("least_squares_residual: rank-deficient regressor");
        const cdouble x0 = r(k, k);
        const cdouble phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cdouble{1.0};
        const cdouble alpha = -phase * xnorm;

        double vnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            v[i] = r(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) continue;

        for (std::size_t c = k; c < p; ++c) {
            cdouble s{};
            for (std::size_t i = k; i < m; ++i) s += std::conj(v[i]) * r(i, c);
            s *= 2.0 / vnorm2;
            for (std::size_t i = k; i < m; ++i) r(i, c) -= s * v[i];
        }
        cdouble s{};
        for (std::size_t i = k; i < m; ++i) s += std::conj(v[i]) * qy[i];
        s *= 2.0 / vnorm2;
        for (std::size_t i = k; i < m; ++i) qy[i] -= s * v[i];
    }

    double residual = 0.0;
    for (std::size_t i = p; i < m; ++i) residual += std::norm(qy[i]);
    return residual;
}

// ---------------------------------------------------------------------------
// Partial DFT
// ---------------------------------------------------------------------------

namespace {

void check_column_args(std::size_t i, std::size_t n, std::size_t l) {
    if (n == 0 || l + 1 >= n) throw std::invalid_argument("dft_column: require 0 <= L < N-1");
    if (i < 1 || i > n) throw std::invalid_argument("dft_column: subcarrier index out of range");
}

}  // namespace

PartialDftColumn dft_column(std::size_t i, std::size_t n, std::size_t l) {
    check_column_args(i, n, l);
    PartialDftColumn col;
    col.index = i;
    col.entries.resize(l + 1);
    // Reduce the exponent modulo N before scaling so large products stay exact.
    for (std::size_t k = 0; k <= l; ++k) {
        const std::size_t e = ((i - 1) * k) % n;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n);
        col.entries[k] = std::polar(1.0, angle);
    }
    return col;
}

double column_correlation(std::size_t i, std::size_t i_prime, std::size_t n, std::size_t l) {
    check_column_args(i, n, l);
    check_column_args(i_prime, n, l);
    const std::size_t shift = (i + n - i_prime) % n;
    cdouble acc{};
    for (std::size_t k = 0; k <= l; ++k) {
        const std::size_t e = (shift * k) % n;
        acc += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n));
    }
    return std::abs(acc);
}

// ---------------------------------------------------------------------------
// Incomplete gamma and chi-square
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxGammaIterations = 10000;
constexpr double kGammaEps = 1e-16;

double gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxGammaIterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericError("regularized_gamma_p: series did not converge");
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double gamma_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int n = 1; n < kMaxGammaIterations; ++n) {
        const double an = -n * (n - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaEps)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw NumericError("regularized_gamma_q: continued fraction did not converge");
}

void check_gamma_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw std::invalid_argument("incomplete gamma: require a > 0, x >= 0");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double chi_square_cdf(double r, unsigned dof) {
    if (dof == 0) throw std::invalid_argument("chi_square_cdf: dof must be >= 1");
    if (r <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * dof, 0.5 * r);
}

double chi_square_quantile(double epsilon, unsigned dof) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("chi_square_quantile: epsilon must be in (0, 1)");
    if (dof == 0) throw std::invalid_argument("chi_square_quantile: dof must be >= 1");
    const double a = 0.5 * dof;
    const auto tail = [a](double r) { return r <= 0.0 ? 1.0 : regularized_gamma_q(a, 0.5 * r); };

    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    for (int expansions = 0; tail(hi) > epsilon; ++expansions) {
        if (expansions > 200) throw NumericError("chi_square_quantile: could not bracket the quantile");
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 400 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tail(mid) > epsilon)
            lo = mid;
        else
            hi = mid;
    }
    const double r = 0.5 * (lo + hi);
    if (std::abs(tail(r) - epsilon) > 1e-8) throw NumericError("chi_square_quantile: bisection did not converge");
    return r;
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

std::size_t RngStream::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double RngStream::gaussian() { return normal_(engine_); }

cdouble RngStream::complex_gaussian() {
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

}  // namespace blindeq
