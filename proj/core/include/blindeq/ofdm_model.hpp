#ifndef BLINDEQ_OFDM_MODEL_HPP
#define BLINDEQ_OFDM_MODEL_HPP

// Constellations, system configuration and frequency-domain synthesis of
// block-fading OFDM symbols: Y(j) = sqrt(rho) X(j) a_j^H h + N(j).

#include "blindeq/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blindeq {

/// Constellation point indices, one per subcarrier (0-based point index into the table).
using SymbolSequence = std::vector<int>;

enum class Modulation { Bpsk, Qam4, Qam16, Custom };

/**
 * Ordered point table with a bit label per point.
 *
 * Point k carries label labels()[k]. The built-in tables are Gray labelled
 * and normalized to unit average energy. Point 0 is the pilot symbol.
 */
class Constellation {
public:
    static Constellation bpsk();
    static Constellation qam4();
    static Constellation qam16();
    /// Points are normalized to unit average energy; labels must be a permutation of 0..size-1.
    static Constellation custom(std::string name, std::vector<cdouble> points, std::vector<unsigned> labels);
    /// Accepts "bpsk", "qam4"/"4qam"/"qpsk" and "qam16"/"16qam".
    static Constellation from_name(std::string_view name);

    const std::string& name() const noexcept { return name_; }
    Modulation modulation() const noexcept { return modulation_; }
    std::size_t size() const noexcept { return points_.size(); }
    unsigned bits_per_symbol() const noexcept { return bits_; }
    const std::vector<cdouble>& points() const noexcept { return points_; }
    cdouble point(int k) const { return points_.at(static_cast<std::size_t>(k)); }
    unsigned label(int k) const { return labels_.at(static_cast<std::size_t>(k)); }
    bool is_constant_modulus() const noexcept { return constant_modulus_; }

    /// Index of the closest point; ties resolve to the lower index.
    int nearest(cdouble z) const;
    /// Point index carrying the given bit label.
    int index_of_label(unsigned bits) const;
    /// Number of differing bits between the labels of two points.
    unsigned bit_distance(int a, int b) const;

    ComplexVector modulate(const SymbolSequence& symbols) const;

private:
    Constellation(std::string name, Modulation modulation, std::vector<cdouble> points, std::vector<unsigned> labels);

    std::string name_;
    Modulation modulation_ = Modulation::Custom;
    std::vector<cdouble> points_;
    std::vector<unsigned> labels_;
    std::vector<int> by_label_;
    unsigned bits_ = 0;
    bool constant_modulus_ = false;
};

/// Everything the transmitter, channel and receivers agree on.
struct SystemConfig {
    std::size_t n = 16;  ///< subcarriers
    std::size_t l = 3;   ///< CP length; the channel has l+1 taps
    double rho = 100.0;  ///< linear SNR
    Constellation constellation = Constellation::bpsk();
    double pdp_decay = 0.2;       ///< E|h(t)|^2 proportional to exp(-pdp_decay * t)
    bool normalize_pdp = true;    ///< scale the profile to unit total power
    bool identity_prior = false;  ///< receivers use R_h = I instead of the profile
    std::size_t pilot = 1;        ///< 1-based subcarrier carrying the known symbol
    double epsilon = 0.01;        ///< radius tail probability

    std::size_t taps() const noexcept { return l + 1; }

    /// Throws std::invalid_argument if any field is out of range.
    void validate() const;

    /// Channel tap variances of the power-delay profile (length l+1).
    std::vector<double> pdp() const;
    /// Covariance the receivers assume: identity or diag(pdp()).
    ComplexMatrix channel_prior() const;
};

double db_to_linear(double db);

struct ChannelRealization {
    ComplexVector taps;
    ComplexMatrix covariance;  ///< diagonal, equals diag(pdp)
};

struct ObservedSymbol {
    ComplexVector received;
    SymbolSequence truth_symbols;
    ComplexVector truth_data;
    ComplexVector truth_taps;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

/// All N partial-DFT columns for (n, l), index k holds column k+1.
std::vector<PartialDftColumn> dft_columns(std::size_t n, std::size_t l);

/// Channel frequency response by a full N-point DFT of the zero-padded taps.
ComplexVector frequency_response(std::span<const cdouble> taps, std::size_t n);

ChannelRealization sample_channel(const SystemConfig& config, RngStream& rng);

/// Uniform i.i.d. symbols with the pilot subcarrier forced to point 0.
SymbolSequence draw_data(const SystemConfig& config, RngStream& rng);

ComplexVector draw_noise(std::size_t n, RngStream& rng);

/// Builds Y from explicit noise. Pass an all-zero noise vector for a noiseless symbol.
ObservedSymbol synthesize(const SystemConfig& config, const SymbolSequence& symbols, std::span<const cdouble> taps,
                          std::span<const cdouble> noise);
ObservedSymbol synthesize(const SystemConfig& config, const SymbolSequence& symbols, std::span<const cdouble> taps,
                          RngStream& rng);

struct ChannelDetection {
    SymbolSequence symbols;
    std::size_t erasures = 0;  ///< subcarriers with a zero channel gain, decided as point 0
};

/// One-tap equalization with known taps followed by nearest-point decisions.
ChannelDetection equalize_with_channel(std::span<const cdouble> received, std::span<const cdouble> taps,
                                       const SystemConfig& config);

ChannelDetection equalize_perfect_csi(const ObservedSymbol& observed, const SystemConfig& config);

}  // namespace blindeq

#endif  // BLINDEQ_OFDM_MODEL_HPP
