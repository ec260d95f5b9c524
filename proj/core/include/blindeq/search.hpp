#ifndef BLINDEQ_SEARCH_HPP
#define BLINDEQ_SEARCH_HPP

/**
 * @file search.hpp
 * @brief Depth-first blind search over constellation sequences.
 *
 * The tree has one level per subcarrier (in visit order) and one branch per
 * constellation point; the pilot level has a single branch. A node is kept
 * while its running MAP cost stays within the radius r. Every full-length
 * sequence tightens r to its own cost, so when the tree is exhausted the
 * incumbent is the cost minimizer. If no sequence fits, r is doubled and the
 * search starts over.
 */

#include "blindeq/cost_engine.hpp"
#include "blindeq/numerics.hpp"
#include "blindeq/ofdm_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace blindeq {

/// Thrown when the radius doubling limit or the evaluation budget is exhausted.
class SearchAborted : public NumericError {
public:
    using NumericError::NumericError;
};

struct RadiusPolicy {
    double epsilon = 0.01;
    unsigned dof = 0;  ///< 2 (N + L + 1)
    double initial = 0.0;
};

/// r with P(xi > r) = epsilon for xi chi-square with 2(N+L+1) degrees of freedom.
RadiusPolicy initial_radius(const SystemConfig& config);

struct VisitOrder {
    std::vector<std::size_t> carriers;  ///< 1-based subcarrier indices
    std::size_t stride = 1;
    bool pilot_first = true;
};

/// Stride floor(N/(L+1)) visit: 1, 1+D, 1+2D, ..., 2, 2+D, ..., with the pilot moved to the front.
VisitOrder carrier_order(std::size_t n, std::size_t l, std::size_t pilot);
/// 1..N with the pilot moved to the front.
VisitOrder natural_order(std::size_t n, std::size_t pilot);

/// Throws std::invalid_argument unless order is a permutation of 1..n.
void check_permutation(const VisitOrder& order, std::size_t n);

struct SearchTrace {
    SymbolSequence detected;  ///< indexed by subcarrier (0-based), not by depth
    double cost = 0.0;
    ComplexVector channel_estimate;
    /// Nodes at each depth whose cost passed the radius test, summed over restarts.
    std::vector<std::uint64_t> visited_per_depth;
    /// Cost evaluations (RLS updates) at each depth, summed over restarts.
    std::vector<std::uint64_t> evaluated_per_depth;
    /// Running cost along the winning path, by depth.
    std::vector<double> path_costs;
    /// Upward moves that resumed at a shallower depth with untried points.
    std::uint64_t backtracks = 0;
    unsigned restarts = 0;
    double initial_radius = 0.0;
    double final_radius = 0.0;
    double wall_seconds = 0.0;

    double mean_nodes_per_subcarrier() const;
    std::uint64_t evaluations() const;
};

struct SearchOptions {
    unsigned max_doublings = 64;
    /// Exact variant only: precomputed gains for this config and visit order.
    const GainTable* gain_table = nullptr;
    /// Overrides the chi-square radius when positive.
    double radius_override = 0.0;
    /// Throws SearchAborted once this many RLS updates were spent (0 = unlimited).
    std::uint64_t max_evaluations = 0;
};

SearchTrace blind_search(std::span<const cdouble> received, const SystemConfig& config, RlsVariant variant,
                         const VisitOrder& order, const SearchOptions& options = {});

inline SearchTrace blind_search(const ObservedSymbol& observed, const SystemConfig& config, RlsVariant variant,
                                const VisitOrder& order, const SearchOptions& options = {}) {
    return blind_search(observed.received, config, variant, order, options);
}

enum class CarrierOrdering { Natural, Reordered };

struct DetectorSettings {
    RlsVariant variant = RlsVariant::Exact;
    CarrierOrdering ordering = CarrierOrdering::Natural;
    /// Reused across calls when non-null; must match the config and the ordering.
    const GainTable* gain_table = nullptr;
    unsigned max_doublings = 64;
    std::uint64_t max_evaluations = 0;  ///< 0 = unlimited
};

/// Default pairing: the exact variant visits in natural order, the fast one reordered.
DetectorSettings default_settings(RlsVariant variant);

struct Detection {
    SymbolSequence symbols;
    ComplexVector channel_estimate;
    SearchTrace trace;
};

VisitOrder make_order(const SystemConfig& config, CarrierOrdering ordering);

Detection detect(std::span<const cdouble> received, const SystemConfig& config, const DetectorSettings& settings);
Detection detect(std::span<const cdouble> received, const SystemConfig& config, RlsVariant variant);

}  // namespace blindeq

#endif  // BLINDEQ_SEARCH_HPP
