#ifndef BLINDEQ_BASELINES_HPP
#define BLINDEQ_BASELINES_HPP

// Reference receivers: exhaustive MAP search, comb-pilot MMSE training with
// one-tap equalization. Perfect-CSI detection lives in ofdm_model.hpp
// (equalize_perfect_csi) and is reachable through this header.

#include "blindeq/ofdm_model.hpp"
#include "blindeq/search.hpp"

#include <cstdint>
#include <span>

namespace blindeq {

/// Largest number of candidate sequences exhaustive_map will enumerate.
inline constexpr std::uint64_t kExhaustiveLimit = std::uint64_t{1} << 20;

struct ExhaustiveResult {
    SymbolSequence symbols;  ///< indexed by subcarrier
    double cost = 0.0;
    std::uint64_t candidates = 0;
};

/**
 * Minimizes the batch MAP cost over every sequence with the pilot pinned.
 *
 * Candidates are enumerated lexicographically along the visit order with
 * the constellation table order, the same order in which the depth-first
 * search meets leaves, and only a strictly smaller cost replaces the
 * incumbent. Throws std::invalid_argument when |Omega|^(N-1) exceeds
 * kExhaustiveLimit.
 */
ExhaustiveResult exhaustive_map(std::span<const cdouble> received, const SystemConfig& config,
                                const VisitOrder& order);
ExhaustiveResult exhaustive_map(std::span<const cdouble> received, const SystemConfig& config);

struct PilotScheme {
    std::vector<std::size_t> indices;  ///< 1-based subcarriers
    SymbolSequence symbols;            ///< point index transmitted on each pilot
};

/// L+1 pilots spaced floor(N/(L+1)) apart starting at config.pilot, all carrying point 0.
PilotScheme comb_pilots(const SystemConfig& config);

/// Puts the pilot symbols of the scheme into a data sequence.
SymbolSequence apply_pilots(SymbolSequence symbols, const PilotScheme& scheme);

/// Linear MMSE channel estimate from the pilot subcarriers:
/// sqrt(rho) R_h B^H (I + rho B R_h B^H)^-1 Y_p with B = diag(X_p) A_p^H.
ComplexVector train_estimate(std::span<const cdouble> received, const PilotScheme& scheme, const SystemConfig& config);

/// Pilot-trained detection; pilot subcarriers report their known symbols.
ChannelDetection train_detect(std::span<const cdouble> received, const PilotScheme& scheme, const SystemConfig& config);

}  // namespace blindeq

#endif  // BLINDEQ_BASELINES_HPP
