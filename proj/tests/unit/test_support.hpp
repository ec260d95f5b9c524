#pragma once

#include "blindeq/ofdm_model.hpp"

#include <doctest.h>

#include <cmath>

namespace blindeq::test {

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline SystemConfig config(std::size_t n, std::size_t l, double snr_db, Constellation c = Constellation::bpsk()) {
    SystemConfig cfg;
    cfg.n = n;
    cfg.l = l;
    cfg.rho = db_to_linear(snr_db);
    cfg.constellation = std::move(c);
    return cfg;
}

struct Instance {
    ChannelRealization channel;
    SymbolSequence symbols;
    ObservedSymbol observed;
};

inline Instance draw_instance(const SystemConfig& cfg, std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    Instance out;
    out.channel = sample_channel(cfg, rng);
    out.symbols = draw_data(cfg, rng);
    out.observed = synthesize(cfg, out.symbols, out.channel.taps, rng);
    return out;
}

inline ComplexMatrix random_hpd(std::size_t k, RngStream& rng) {
    ComplexMatrix g(k, k);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) g(r, c) = rng.complex_gaussian();
    ComplexMatrix a = g * g.adjoint();
    for (std::size_t r = 0; r < k; ++r) a(r, r) += static_cast<double>(k);
    return a;
}

}  // namespace blindeq::test
