#ifndef BLINDEQ_COST_ENGINE_HPP
#define BLINDEQ_COST_ENGINE_HPP

/**
 * @file cost_engine.hpp
 * @brief Partial-sequence MAP cost maintained by recursive least squares,
 * plus closed-form batch costs used to check it.
 *
 * For a partial sequence X(1..i) the cost is
 *
 *     M = min_h { ||h||^2_{R_h^-1} + sum_j |Y(j) - sqrt(rho) X(j) a_j^H h|^2 },
 *
 * and each new subcarrier adds gamma(i) |innovation|^2 to it. The exact
 * variant carries the (L+1)x(L+1) matrix P; the fast variant starts from
 * P = I and replaces every P a_i by a_i, which is exact while the visited
 * columns stay mutually orthogonal.
 */

#include "blindeq/numerics.hpp"
#include "blindeq/ofdm_model.hpp"

#include <span>

namespace blindeq {

enum class RlsVariant { Exact, Fast };

/// Data-independent part of one exact update: gamma(i) and P_{i-1} a_i.
struct GainStep {
    double gamma = 1.0;
    ComplexVector prior_times_column;
};

/**
 * Precomputed exact-variant gains for a constant-modulus constellation.
 *
 * When |X|^2 is the same for every point, gamma(i) and the P recursion do
 * not depend on the data, so one table per (config, visit order) serves
 * every trial.
 */
class GainTable {
public:
    /// visit_order holds 1-based subcarrier indices. Throws std::invalid_argument for non-CM constellations.
    GainTable(const SystemConfig& config, std::span<const std::size_t> visit_order);

    std::size_t size() const noexcept { return steps_.size(); }
    const GainStep& step(std::size_t depth) const { return steps_.at(depth); }
    std::span<const std::size_t> order() const noexcept { return order_; }

private:
    std::vector<GainStep> steps_;
    std::vector<std::size_t> order_;
};

struct CostSnapshot;

/// Running RLS state for one partial sequence.
class RlsState {
public:
    /// Exact variant with P_{-1} = prior. Throws std::invalid_argument if prior is not Hermitian positive-definite.
    static RlsState exact(const ComplexMatrix& prior);
    /// Fast variant with P_{-1} = I (no matrix is stored).
    static RlsState fast(std::size_t taps);

    RlsVariant variant() const noexcept { return variant_; }
    std::size_t absorbed() const noexcept { return absorbed_; }
    double cost() const noexcept { return cost_; }
    const ComplexVector& estimate() const noexcept { return estimate_; }
    /// Empty for the fast variant.
    const ComplexMatrix& p() const noexcept { return p_; }
    std::size_t taps() const noexcept { return estimate_.size(); }

    /// Adds one subcarrier with hypothesised symbol. Returns gamma(i).
    /// A non-finite innovation sets the cost to +inf.
    double absorb(cdouble symbol, cdouble observed, const PartialDftColumn& column, double rho);

    /// Exact update driven by a precomputed gain step; P is not touched.
    double absorb(const GainStep& step, cdouble symbol, cdouble observed, const PartialDftColumn& column, double rho);

    CostSnapshot snapshot() const;
    void restore(const CostSnapshot& snap);

    bool operator==(const RlsState&) const = default;

private:
    RlsState() = default;
    double finish_update(double gamma, std::span<const cdouble> gain_direction, cdouble symbol, cdouble innovation,
                         double rho);

    RlsVariant variant_ = RlsVariant::Exact;
    std::size_t absorbed_ = 0;
    double cost_ = 0.0;
    ComplexVector estimate_;
    ComplexMatrix p_;
    ComplexVector work_;
};

struct CostSnapshot {
    RlsState state;
};

RlsState rls_init(const SystemConfig& config, RlsVariant variant);

inline double rls_absorb(RlsState& state, cdouble symbol, cdouble observed, const PartialDftColumn& column,
                         double rho) {
    return state.absorb(symbol, observed, column, rho);
}

/// gamma = 1 / (1 + rho |X|^2 a^H P a), fills p_times_a with P a.
double exact_gain(const ComplexMatrix& p, const PartialDftColumn& column, double rho_energy,
                  ComplexVector& p_times_a);
/// gamma = 1 / (1 + rho |X|^2 (L+1)).
double fast_gain(std::size_t taps, double rho_energy);

// ---------------------------------------------------------------------------
// Batch oracles. data, observed and columns describe the same i subcarriers.
// ---------------------------------------------------------------------------

/// Y^H (I + rho B R_h B^H)^-1 Y with B = diag(X) A^H, solved at size i.
double batch_map_cost(std::span<const cdouble> data, std::span<const cdouble> observed,
                      std::span<const PartialDftColumn> columns, const ComplexMatrix& prior, double rho);

/// Same quantity through the matrix inversion lemma, solved at size L+1:
/// ||Y||^2 - rho v^H (R_h^-1 + rho B^H B)^-1 v with v = B^H Y.
double batch_map_cost_reduced(std::span<const cdouble> data, std::span<const cdouble> observed,
                              std::span<const PartialDftColumn> columns, const ComplexMatrix& prior, double rho);

/// Projection residual of Y onto the columns of sqrt(rho) diag(X) A^H (zero while i <= L+1).
double batch_ls_cost(std::span<const cdouble> data, std::span<const cdouble> observed,
                     std::span<const PartialDftColumn> columns, double rho);

/// [R_h^-1 + rho A diag(X)^H diag(X) A^H]^-1
ComplexMatrix map_error_covariance(std::span<const cdouble> data, std::span<const PartialDftColumn> columns,
                                   const ComplexMatrix& prior, double rho);

}  // namespace blindeq

#endif  // BLINDEQ_COST_ENGINE_HPP
