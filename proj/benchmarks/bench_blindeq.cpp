#include "blindeq/cost_engine.hpp"
#include "blindeq/numerics.hpp"
#include "blindeq/search.hpp"

#include <benchmark/benchmark.h>

using namespace blindeq;

namespace {

SystemConfig make_config(std::size_t n, std::size_t l, double snr_db, Constellation c) {
    SystemConfig cfg;
    cfg.n = n;
    cfg.l = l;
    cfg.rho = db_to_linear(snr_db);
    cfg.constellation = std::move(c);
    return cfg;
}

// One full pass of N updates; range(0) is L.
void absorb_pass(benchmark::State& state, RlsVariant variant) {
    const auto l = static_cast<std::size_t>(state.range(0));
    const auto cfg = make_config(64, l, 20.0, Constellation::qam4());
    const auto cols = dft_columns(64, l);
    RngStream rng(7, 0);
    const auto ch = sample_channel(cfg, rng);
    const auto x = draw_data(cfg, rng);
    const auto obs = synthesize(cfg, x, ch.taps, rng);
    const auto data = cfg.constellation.modulate(x);
    for (auto _ : state) {
        auto rls = rls_init(cfg, variant);
        for (std::size_t j = 0; j < 64; ++j) rls.absorb(data[j], obs.received[j], cols[j], cfg.rho);
        benchmark::DoNotOptimize(rls.cost());
    }
    state.SetItemsProcessed(state.iterations() * 64);
}

void BM_AbsorbExact(benchmark::State& state) { absorb_pass(state, RlsVariant::Exact); }
void BM_AbsorbFast(benchmark::State& state) { absorb_pass(state, RlsVariant::Fast); }
BENCHMARK(BM_AbsorbExact)->Arg(3)->Arg(15);
BENCHMARK(BM_AbsorbFast)->Arg(3)->Arg(15);

// Blind detection at N=16, L=3; range(0) is SNR in dB.
void BM_BlindSearchExact(benchmark::State& state) {
    const auto cfg = make_config(16, 3, static_cast<double>(state.range(0)), Constellation::bpsk());
    std::vector<ComplexVector> ys;
    for (std::uint64_t s = 0; s < 64; ++s) {
        RngStream rng(8, s);
        const auto ch = sample_channel(cfg, rng);
        ys.push_back(synthesize(cfg, draw_data(cfg, rng), ch.taps, rng).received);
    }
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(detect(ys[k++ % ys.size()], cfg, RlsVariant::Exact).trace.cost);
    }
}
BENCHMARK(BM_BlindSearchExact)->Arg(10)->Arg(20)->Arg(30);

void BM_ChiSquareQuantile(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(chi_square_quantile(0.01, 160));
}
BENCHMARK(BM_ChiSquareQuantile);

}  // namespace

BENCHMARK_MAIN();
