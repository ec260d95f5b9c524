#include "blindeq/ofdm_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blindeq {

Constellation::Constellation(std::string name, Modulation modulation, std::vector<cdouble> points,
                             std::vector<unsigned> labels)
    : name_(std::move(name)), modulation_(modulation), points_(std::move(points)), labels_(std::move(labels)) {
    const std::size_t m = points_.size();
    if (m < 2 || !std::has_single_bit(m)) throw std::invalid_argument("constellation size must be a power of two >= 2");
    if (labels_.size() != m) throw std::invalid_argument("constellation needs one label per point");
    bits_ = static_cast<unsigned>(std::countr_zero(m));

    by_label_.assign(m, -1);
    for (std::size_t k = 0; k < m; ++k) {
        if (labels_[k] >= m || by_label_[labels_[k]] != -1)
            throw std::invalid_argument("constellation labels must be a permutation of 0..size-1");
        by_label_[labels_[k]] = static_cast<int>(k);
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            if (std::abs(points_[a] - points_[b]) < 1e-12) throw std::invalid_argument("constellation points must be distinct");

    double energy = 0.0;
    for (const auto& p : points_) energy += std::norm(p);
    energy /= static_cast<double>(m);
    if (!(energy > 0.0)) throw std::invalid_argument("constellation has zero energy");
    const double scale = 1.0 / std::sqrt(energy);
    if (std::abs(energy - 1.0) > 1e-15)
        for (auto& p : points_) p *= scale;

    constant_modulus_ = true;
    for (const auto& p : points_)
        if (std::abs(std::abs(p) - std::abs(points_.front())) > 1e-12) constant_modulus_ = false;
}

Constellation Constellation::bpsk() { return Constellation("bpsk", Modulation::Bpsk, {1.0, -1.0}, {0, 1}); }

Constellation Constellation::qam4() {
    // label bit 1 -> in-phase sign, bit 0 -> quadrature sign.
    const double s = std::numbers::sqrt2 / 2.0;
    std::vector<cdouble> points{{s, s}, {s, -s}, {-s, s}, {-s, -s}};
    return Constellation("qam4", Modulation::Qam4, std::move(points), {0, 1, 2, 3});
}

Constellation Constellation::qam16() {
    // Two Gray-coded bits per axis: levels -3, -1, 1, 3 carry 00, 01, 11, 10.
    constexpr double levels[4] = {-3.0, -1.0, 1.0, 3.0};
    constexpr unsigned gray[4] = {0b00, 0b01, 0b11, 0b10};
    const double scale = 1.0 / std::sqrt(10.0);
    std::vector<cdouble> points(16);
    std::vector<unsigned> labels(16);
    for (unsigned label = 0; label < 16; ++label) {
        const unsigned gi = label >> 2;
        const unsigned gq = label & 0b11;
        const auto level_of = [&](unsigned g) {
            return levels[std::find(std::begin(gray), std::end(gray), g) - std::begin(gray)];
        };
        points[label] = cdouble{level_of(gi), level_of(gq)} * scale;
        labels[label] = label;
    }
    return Constellation("qam16", Modulation::Qam16, std::move(points), std::move(labels));
}

Constellation Constellation::custom(std::string name, std::vector<cdouble> points, std::vector<unsigned> labels) {
    return Constellation(std::move(name), Modulation::Custom, std::move(points), std::move(labels));
}

Constellation Constellation::from_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "bpsk") return bpsk();
    if (lower == "qam4" || lower == "4qam" || lower == "qpsk") return qam4();
    if (lower == "qam16" || lower == "16qam") return qam16();
    throw std::invalid_argument("unknown modulation '" + std::string(name) + "'");
}

int Constellation::nearest(cdouble z) const {
    int best = 0;
    double best_d = std::norm(z - points_[0]);
    for (std::size_t k = 1; k < points_.size(); ++k) {
        const double d = std::norm(z - points_[k]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

int Constellation::index_of_label(unsigned bits) const {
    if (bits >= by_label_.size()) throw std::invalid_argument("bit label out of range");
    return by_label_[bits];
}

unsigned Constellation::bit_distance(int a, int b) const {
    return static_cast<unsigned>(std::popcount(label(a) ^ label(b)));
}

ComplexVector Constellation::modulate(const SymbolSequence& symbols) const {
    ComplexVector out(symbols.size());
    std::transform(symbols.begin(), symbols.end(), out.begin(), [this](int k) { return point(k); });
    return out;
}

// ---------------------------------------------------------------------------

void SystemConfig::validate() const {
    if (n < 2) throw std::invalid_argument("config: N must be >= 2");
    if (l + 1 >= n) throw std::invalid_argument("config: require L+1 < N");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("config: rho must be positive and finite");
    if (!(pdp_decay >= 0.0)) throw std::invalid_argument("config: pdp decay must be >= 0");
    if (pilot < 1 || pilot > n) throw std::invalid_argument("config: pilot position out of range");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("config: epsilon must be in (0, 1)");
}

std::vector<double> SystemConfig::pdp() const {
    std::vector<double> var(l + 1);
    for (std::size_t t = 0; t <= l; ++t) var[t] = std::exp(-pdp_decay * static_cast<double>(t));
    if (normalize_pdp) {
        double total = 0.0;
        for (double v : var) total += v;
        for (double& v : var) v /= total;
    }
    return var;
}

ComplexMatrix SystemConfig::channel_prior() const {
    if (identity_prior) return ComplexMatrix::identity(l + 1);
    const auto var = pdp();
    return ComplexMatrix::diagonal(var);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::vector<PartialDftColumn> dft_columns(std::size_t n, std::size_t l) {
    std::vector<PartialDftColumn> cols;
    cols.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) cols.push_back(dft_column(i, n, l));
    return cols;
}

ComplexVector frequency_response(std::span<const cdouble> taps, std::size_t n) {
    if (taps.size() > n) throw std::invalid_argument("frequency_response: more taps than subcarriers");
    ComplexVector out(n);
    for (std::size_t j = 0; j < n; ++j) {
        cdouble acc{};
        for (std::size_t t = 0; t < taps.size(); ++t) {
            const std::size_t e = (j * t) % n;
            acc += std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n)) * taps[t];
        }
        out[j] = acc;
    }
    return out;
}

ChannelRealization sample_channel(const SystemConfig& config, RngStream& rng) {
    config.validate();
    const auto var = config.pdp();
    ChannelRealization ch;
    ch.taps.resize(var.size());
    for (std::size_t t = 0; t < var.size(); ++t) ch.taps[t] = std::sqrt(var[t]) * rng.complex_gaussian();
    ch.covariance = ComplexMatrix::diagonal(var);
    return ch;
}

SymbolSequence draw_data(const SystemConfig& config, RngStream& rng) {
    config.validate();
    SymbolSequence symbols(config.n);
    for (auto& s : symbols) s = static_cast<int>(rng.uniform_index(config.constellation.size()));
    symbols[config.pilot - 1] = 0;
    return symbols;
}

ComplexVector draw_noise(std::size_t n, RngStream& rng) {
    ComplexVector noise(n);
    for (auto& v : noise) v = rng.complex_gaussian();
    return noise;
}

ObservedSymbol synthesize(const SystemConfig& config, const SymbolSequence& symbols, std::span<const cdouble> taps,
                          std::span<const cdouble> noise) {
    config.validate();
    if (symbols.size() != config.n || noise.size() != config.n || taps.size() != config.taps())
        throw std::invalid_argument("synthesize: dimensions disagree with config");
    ObservedSymbol obs;
    obs.truth_symbols = symbols;
    obs.truth_data = config.constellation.modulate(symbols);
    obs.truth_taps.assign(taps.begin(), taps.end());
    obs.received.resize(config.n);
    const double amp = std::sqrt(config.rho);
    for (std::size_t j = 0; j < config.n; ++j) {
        const auto a = dft_column(j + 1, config.n, config.l);
        obs.received[j] = amp * obs.truth_data[j] * inner(a.entries, taps) + noise[j];
    }
    return obs;
}

ObservedSymbol synthesize(const SystemConfig& config, const SymbolSequence& symbols, std::span<const cdouble> taps,
                          RngStream& rng) {
    const auto noise = draw_noise(config.n, rng);
    auto obs = synthesize(config, symbols, taps, noise);
    obs.seed = rng.seed();
    obs.stream_id = rng.stream_id();
    return obs;
}

ChannelDetection equalize_with_channel(std::span<const cdouble> received, std::span<const cdouble> taps,
                                       const SystemConfig& config) {
    if (received.size() != config.n || taps.size() != config.taps())
        throw std::invalid_argument("equalize_with_channel: dimensions disagree with config");
    const auto response = frequency_response(taps, config.n);
    const double amp = std::sqrt(config.rho);
    ChannelDetection out;
    out.symbols.resize(config.n);
    for (std::size_t j = 0; j < config.n; ++j) {
        const cdouble gain = amp * response[j];
        if (gain == cdouble{}) {
            out.symbols[j] = 0;
            ++out.erasures;
            continue;
        }
        out.symbols[j] = config.constellation.nearest(received[j] / gain);
    }
    return out;
}

ChannelDetection equalize_perfect_csi(const ObservedSymbol& observed, const SystemConfig& config) {
    return equalize_with_channel(observed.received, observed.truth_taps, config);
}

}  // namespace blindeq
