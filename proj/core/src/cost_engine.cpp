#include "blindeq/cost_engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace blindeq {

namespace {

void check_prior(const ComplexMatrix& prior) {
    if (!prior.is_square() || prior.empty()) throw std::invalid_argument("channel prior must be a non-empty square matrix");
    for (std::size_t r = 0; r < prior.rows(); ++r)
        for (std::size_t c = 0; c < prior.cols(); ++c)
            if (std::abs(prior(r, c) - std::conj(prior(c, r))) > 1e-12 * (1.0 + std::abs(prior(r, c))))
                throw std::invalid_argument("channel prior must be Hermitian");
    HermitianSolver solver(prior);
    if (solver.used_fallback()) throw std::invalid_argument("channel prior must be positive definite");
}

// P <- P - scale * pa pa^H. P stays Hermitian by construction.
void downdate(ComplexMatrix& p, std::span<const cdouble> pa, double scale) {
    const std::size_t n = pa.size();
    for (std::size_t r = 0; r < n; ++r) {
        const cdouble s = scale * pa[r];
        auto row = p.row(r);
        for (std::size_t c = 0; c < n; ++c) row[c] -= s * std::conj(pa[c]);
        row[r] = row[r].real();
    }
}

}  // namespace

double exact_gain(const ComplexMatrix& p, const PartialDftColumn& column, double rho_energy, ComplexVector& p_times_a) {
    const std::size_t n = column.entries.size();
    p_times_a.resize(n);
    double quad = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        cdouble acc{};
        const auto row = p.row(r);
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * column.entries[c];
        p_times_a[r] = acc;
        quad += (std::conj(column.entries[r]) * acc).real();
    }
    return 1.0 / (1.0 + rho_energy * quad);
}

double fast_gain(std::size_t taps, double rho_energy) {
    return 1.0 / (1.0 + rho_energy * static_cast<double>(taps));
}

// ---------------------------------------------------------------------------

GainTable::GainTable(const SystemConfig& config, std::span<const std::size_t> visit_order)
    : order_(visit_order.begin(), visit_order.end()) {
    config.validate();
    if (!config.constellation.is_constant_modulus())
        throw std::invalid_argument("GainTable: constellation is not constant modulus");
    const double rho_energy = config.rho * std::norm(config.constellation.point(0));
    ComplexMatrix p = config.channel_prior();
    check_prior(p);
    steps_.reserve(order_.size());
    for (const std::size_t idx : order_) {
        const auto column = dft_column(idx, config.n, config.l);
        GainStep step;
        step.gamma = exact_gain(p, column, rho_energy, step.prior_times_column);
        downdate(p, step.prior_times_column, rho_energy * step.gamma);
        steps_.push_back(std::move(step));
    }
}

// ---------------------------------------------------------------------------

RlsState RlsState::exact(const ComplexMatrix& prior) {
    check_prior(prior);
    RlsState s;
    s.variant_ = RlsVariant::Exact;
    s.estimate_.assign(prior.rows(), cdouble{});
    s.p_ = prior;
    s.work_.resize(prior.rows());
    return s;
}

RlsState RlsState::fast(std::size_t taps) {
    if (taps == 0) throw std::invalid_argument("RlsState::fast: need at least one tap");
    RlsState s;
    s.variant_ = RlsVariant::Fast;
    s.estimate_.assign(taps, cdouble{});
    return s;
}

double RlsState::finish_update(double gamma, std::span<const cdouble> gain_direction, cdouble symbol,
                               cdouble innovation, double rho) {
    ++absorbed_;
    if (!std::isfinite(innovation.real()) || !std::isfinite(innovation.imag())) {
        cost_ = std::numeric_limits<double>::infinity();
        return gamma;
    }
    // g = sqrt(rho) gamma conj(X) * direction
    const cdouble g_scale = std::sqrt(rho) * gamma * std::conj(symbol) * innovation;
    for (std::size_t k = 0; k < estimate_.size(); ++k) estimate_[k] += g_scale * gain_direction[k];
    cost_ += gamma * std::norm(innovation);
    return gamma;
}

namespace {

cdouble innovation_of(cdouble symbol, cdouble observed, const PartialDftColumn& column, const ComplexVector& estimate,
                      double rho) {
    if (column.entries.size() != estimate.size()) throw std::invalid_argument("RLS: column length differs from tap count");
    cdouble predicted{};
    for (std::size_t k = 0; k < estimate.size(); ++k) predicted += std::conj(column.entries[k]) * estimate[k];
    return observed - std::sqrt(rho) * symbol * predicted;
}

}  // namespace

double RlsState::absorb(cdouble symbol, cdouble observed, const PartialDftColumn& column, double rho) {
    const double rho_energy = rho * std::norm(symbol);
    const cdouble innovation = innovation_of(symbol, observed, column, estimate_, rho);
    if (variant_ == RlsVariant::Fast) {
        const double gamma = fast_gain(estimate_.size(), rho_energy);
        return finish_update(gamma, column.entries, symbol, innovation, rho);
    }
    const double gamma = exact_gain(p_, column, rho_energy, work_);
    downdate(p_, work_, rho_energy * gamma);
    return finish_update(gamma, work_, symbol, innovation, rho);
}

double RlsState::absorb(const GainStep& step, cdouble symbol, cdouble observed, const PartialDftColumn& column,
                        double rho) {
    if (step.prior_times_column.size() != estimate_.size())
        throw std::invalid_argument("RLS: gain step length differs from tap count");
    const cdouble innovation = innovation_of(symbol, observed, column, estimate_, rho);
    return finish_update(step.gamma, step.prior_times_column, symbol, innovation, rho);
}

CostSnapshot RlsState::snapshot() const { return CostSnapshot{*this}; }

void RlsState::restore(const CostSnapshot& snap) { *this = snap.state; }

RlsState rls_init(const SystemConfig& config, RlsVariant variant) {
    config.validate();
    if (variant == RlsVariant::Fast) return RlsState::fast(config.taps());
    return RlsState::exact(config.channel_prior());
}

// ---------------------------------------------------------------------------
// Batch oracles
// ---------------------------------------------------------------------------

namespace {

// Rows X(j) a_j^H, i x (L+1).
ComplexMatrix regressor(std::span<const cdouble> data, std::span<const PartialDftColumn> columns) {
    if (data.size() != columns.size()) throw std::invalid_argument("batch cost: data and column counts differ");
    const std::size_t taps = columns.empty() ? 0 : columns.front().entries.size();
    ComplexMatrix b(data.size(), taps);
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (columns[j].entries.size() != taps) throw std::invalid_argument("batch cost: ragged columns");
        for (std::size_t k = 0; k < taps; ++k) b(j, k) = data[j] * std::conj(columns[j].entries[k]);
    }
    return b;
}

ComplexMatrix information_matrix(const ComplexMatrix& b, const ComplexMatrix& prior, double rho) {
    ComplexMatrix info = inverse(prior);
    const ComplexMatrix gram = b.adjoint() * b;
    for (std::size_t r = 0; r < info.rows(); ++r)
        for (std::size_t c = 0; c < info.cols(); ++c) info(r, c) += rho * gram(r, c);
    return info;
}

}  // namespace

double batch_map_cost(std::span<const cdouble> data, std::span<const cdouble> observed,
                      std::span<const PartialDftColumn> columns, const ComplexMatrix& prior, double rho) {
    if (observed.size() != data.size()) throw std::invalid_argument("batch_map_cost: observation count differs");
    if (data.empty()) return 0.0;
    const ComplexMatrix b = regressor(data, columns);
    if (prior.rows() != b.cols()) throw std::invalid_argument("batch_map_cost: prior size differs from tap count");
    ComplexMatrix s = b * prior * b.adjoint();
    for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t c = 0; c < s.cols(); ++c) s(r, c) *= rho;
        s(r, r) += 1.0;
    }
    const HermitianSolver solver(s);
    const auto z = solver.solve(observed);
    return inner(observed, z).real();
}

double batch_map_cost_reduced(std::span<const cdouble> data, std::span<const cdouble> observed,
                              std::span<const PartialDftColumn> columns, const ComplexMatrix& prior, double rho) {
    if (observed.size() != data.size()) throw std::invalid_argument("batch_map_cost_reduced: observation count differs");
    if (data.empty()) return 0.0;
    const ComplexMatrix b = regressor(data, columns);
    const ComplexVector v = b.adjoint() * observed;
    const HermitianSolver solver(information_matrix(b, prior, rho));
    const auto w = solver.solve(v);
    return squared_norm(observed) - rho * inner(v, w).real();
}

double batch_ls_cost(std::span<const cdouble> data, std::span<const cdouble> observed,
                     std::span<const PartialDftColumn> columns, double rho) {
    if (observed.size() != data.size()) throw std::invalid_argument("batch_ls_cost: observation count differs");
    if (data.empty()) return 0.0;
    ComplexMatrix b = regressor(data, columns);
    if (data.size() <= b.cols()) return 0.0;
    const double amp = std::sqrt(rho);
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (auto& v : b.row(r)) v *= amp;
    return least_squares_residual(b, observed);
}

ComplexMatrix map_error_covariance(std::span<const cdouble> data, std::span<const PartialDftColumn> columns,
                                   const ComplexMatrix& prior, double rho) {
    if (data.empty()) return prior;
    const ComplexMatrix b = regressor(data, columns);
    return HermitianSolver(information_matrix(b, prior, rho)).inverse();
}

}  // namespace blindeq
