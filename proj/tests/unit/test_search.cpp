#include "blindeq/search.hpp"

#include "blindeq/baselines.hpp"
#include "blindeq/cost_engine.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace blindeq;

TEST_SUITE("search") {

TEST_CASE("carrier order for N=64, L=15") {
    const auto order = carrier_order(64, 15, 1);
    CHECK(order.stride == 4);
    REQUIRE(order.carriers.size() == 64);
    const std::vector<std::size_t> head{1, 5, 9, 13, 17, 21, 25, 29, 33, 37, 41, 45, 49, 53, 57, 61, 2, 6, 10};
    CHECK(std::equal(head.begin(), head.end(), order.carriers.begin()));
    CHECK(order.carriers[32] == 3);
    CHECK(order.carriers.back() == 64);
}

TEST_CASE("degenerate stride gives the natural order") {
    const auto order = carrier_order(16, 15, 1);
    CHECK(order.stride == 1);
    for (std::size_t k = 0; k < 16; ++k) CHECK(order.carriers[k] == k + 1);
}

TEST_CASE("non-divisible N uses the floor stride") {
    const auto order = carrier_order(10, 2, 1);
    CHECK(order.stride == 3);
    const std::vector<std::size_t> want{1, 4, 7, 10, 2, 5, 8, 3, 6, 9};
    CHECK(order.carriers == want);
}

TEST_CASE("orders are permutations with the pilot first") {
    RngStream rng(41, 0);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 2 + rng.uniform_index(120);
        const std::size_t l = rng.uniform_index(n - 1);
        const std::size_t pilot = 1 + rng.uniform_index(n);
        for (const auto& order : {carrier_order(n, l, pilot), natural_order(n, pilot)}) {
            CHECK_NOTHROW(check_permutation(order, n));
            CHECK(order.carriers.front() == pilot);
        }
    }
    VisitOrder bad;
    bad.carriers = {1, 1, 2};
    CHECK_THROWS_AS(check_permutation(bad, 3), std::invalid_argument);
    bad.carriers = {1, 2};
    CHECK_THROWS_AS(check_permutation(bad, 3), std::invalid_argument);
}

TEST_CASE("initial radius") {
    auto cfg = blindeq::test::config(64, 15, 20.0);
    const auto big = initial_radius(cfg);
    CHECK(big.dof == 160);
    CHECK(big.initial == doctest::Approx(204.5300945903855).epsilon(1e-9));
    cfg = blindeq::test::config(16, 3, 20.0);
    CHECK(initial_radius(cfg).initial == doctest::Approx(63.690739751564465).epsilon(1e-9));
    double prev = initial_radius(cfg).initial;
    for (double eps : {0.1, 0.5, 0.9, 0.999999}) {
        cfg.epsilon = eps;
        const double r = initial_radius(cfg).initial;
        CHECK(r > 0.0);
        CHECK(r < prev);
        prev = r;
    }
    CHECK(prev < 15.0);
}

TEST_CASE("noiseless flat channel is recovered") {
    for (const auto& c : {Constellation::bpsk(), Constellation::qam4(), Constellation::qam16()}) {
        auto cfg = blindeq::test::config(8, 0, 30.0, c);
        SymbolSequence x(8);
        for (std::size_t j = 1; j < 8; ++j) x[j] = static_cast<int>(j % c.size());
        const ComplexVector taps{1.0};
        const auto obs = synthesize(cfg, x, taps, ComplexVector(8));
        for (const auto variant : {RlsVariant::Exact, RlsVariant::Fast}) {
            const auto det = detect(obs.received, cfg, variant);
            CHECK(det.symbols == x);
            CHECK(det.trace.restarts == 0);
            // Only the true point passes the radius at every depth; the remaining
            // upward moves are the sweeps that confirm the leaf. With one tap the
            // identity prior never shrinks, so the fast cost cannot prune.
            if (variant == RlsVariant::Exact)
                for (auto v : det.trace.visited_per_depth) CHECK(v == 1);
        }
    }
}

TEST_CASE("search agrees with exhaustive MAP on small instances") {
    for (const auto& c : {Constellation::bpsk(), Constellation::qam4()}) {
        const std::size_t n = c.size() == 2 ? 10 : 8;
        auto cfg = blindeq::test::config(n, 1, 12.0, c);
        const auto order = natural_order(n, 1);
        const auto cols = dft_columns(n, 1);
        for (std::uint64_t s = 0; s < 30; ++s) {
            const auto inst = blindeq::test::draw_instance(cfg, 42, s);
            const auto trace = blind_search(inst.observed, cfg, RlsVariant::Exact, order);
            const auto oracle = exhaustive_map(inst.observed.received, cfg, order);
            CHECK(trace.detected == oracle.symbols);
            const double batch = batch_map_cost(c.modulate(trace.detected), inst.observed.received, cols,
                                                cfg.channel_prior(), cfg.rho);
            CHECK(std::abs(trace.cost - batch) < 1e-9 * batch);
            CHECK(std::abs(trace.cost - oracle.cost) < 1e-9 * oracle.cost);
        }
    }
}

TEST_CASE("returned cost never exceeds the truth's cost") {
    auto cfg = blindeq::test::config(16, 3, 10.0, Constellation::qam4());
    const auto cols = dft_columns(16, 3);
    const double r0 = initial_radius(cfg).initial;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto inst = blindeq::test::draw_instance(cfg, 43, s);
        const double truth = batch_map_cost(cfg.constellation.modulate(inst.symbols), inst.observed.received, cols,
                                            cfg.channel_prior(), cfg.rho);
        const auto det = detect(inst.observed.received, cfg, RlsVariant::Exact);
        if (truth <= r0) CHECK(det.trace.cost <= truth * (1 + 1e-12));
        CHECK(det.trace.cost <= det.trace.final_radius);
    }
}

TEST_CASE("path costs are nondecreasing and node counts are sane") {
    for (const auto variant : {RlsVariant::Exact, RlsVariant::Fast}) {
        auto cfg = blindeq::test::config(16, 3, 15.0, Constellation::qam4());
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto inst = blindeq::test::draw_instance(cfg, 44, s);
            const auto det = detect(inst.observed.received, cfg, variant);
            const auto& path = det.trace.path_costs;
            REQUIRE(path.size() == 16);
            for (std::size_t d = 1; d < 16; ++d) CHECK(path[d] >= path[d - 1]);
            CHECK(path.back() == det.trace.cost);
            CHECK(det.trace.visited_per_depth[0] == 1u + det.trace.restarts);
            for (std::size_t d = 0; d < 16; ++d) {
                CHECK(det.trace.visited_per_depth[d] >= 1);
                CHECK(det.trace.evaluated_per_depth[d] >= det.trace.visited_per_depth[d]);
            }
            CHECK(det.symbols[0] == 0);
        }
    }
}

TEST_CASE("detection is deterministic") {
    auto cfg = blindeq::test::config(16, 3, 10.0, Constellation::qam16());
    const auto inst = blindeq::test::draw_instance(cfg, 45, 0);
    const auto a = detect(inst.observed.received, cfg, RlsVariant::Exact);
    const auto b = detect(inst.observed.received, cfg, RlsVariant::Exact);
    CHECK(a.symbols == b.symbols);
    CHECK(a.trace.cost == b.trace.cost);
    CHECK(a.trace.visited_per_depth == b.trace.visited_per_depth);
}

TEST_CASE("a tiny radius forces doublings and still returns the optimum") {
    auto cfg = blindeq::test::config(8, 1, 15.0, Constellation::bpsk());
    const auto order = natural_order(8, 1);
    const auto inst = blindeq::test::draw_instance(cfg, 46, 0);
    SearchOptions opts;
    opts.radius_override = 1e-6;
    const auto trace = blind_search(inst.observed, cfg, RlsVariant::Exact, order, opts);
    CHECK(trace.restarts > 0);
    CHECK(trace.initial_radius == 1e-6);
    CHECK(trace.detected == exhaustive_map(inst.observed.received, cfg, order).symbols);
}

TEST_CASE("doubling guard and evaluation budget abort") {
    auto cfg = blindeq::test::config(8, 1, 15.0, Constellation::bpsk());
    const auto order = natural_order(8, 1);
    const auto inst = blindeq::test::draw_instance(cfg, 47, 0);
    SearchOptions opts;
    opts.radius_override = 1e-300;
    opts.max_doublings = 3;
    CHECK_THROWS_AS(blind_search(inst.observed, cfg, RlsVariant::Exact, order, opts), SearchAborted);

    SearchOptions budget;
    budget.max_evaluations = 3;
    CHECK_THROWS_AS(blind_search(inst.observed, cfg, RlsVariant::Exact, order, budget), SearchAborted);

    // NaN observations are pruned everywhere, so the guard fires instead of looping.
    auto poisoned = inst.observed.received;
    poisoned[3] = cdouble(std::nan(""), 0.0);
    CHECK_THROWS_AS(blind_search(poisoned, cfg, RlsVariant::Exact, order), SearchAborted);
}

TEST_CASE("argument checks") {
    auto cfg = blindeq::test::config(8, 1, 15.0);
    const ComplexVector short_y(7);
    CHECK_THROWS_AS(blind_search(short_y, cfg, RlsVariant::Exact, natural_order(8, 1)), std::invalid_argument);
    const auto table_order = natural_order(8, 1);
    const GainTable table(cfg, table_order.carriers);
    SearchOptions opts;
    opts.gain_table = &table;
    const ComplexVector y(8);
    CHECK_THROWS_AS(blind_search(y, cfg, RlsVariant::Fast, table_order, opts), std::invalid_argument);
    CHECK_THROWS_AS(blind_search(y, cfg, RlsVariant::Exact, carrier_order(8, 1, 1), opts), std::invalid_argument);
}

TEST_CASE("pilot at another position is pinned") {
    auto cfg = blindeq::test::config(16, 3, 25.0, Constellation::qam4());
    cfg.pilot = 7;
    const auto inst = blindeq::test::draw_instance(cfg, 48, 0);
    CHECK(inst.symbols[6] == 0);
    const auto det = detect(inst.observed.received, cfg, RlsVariant::Exact);
    CHECK(det.symbols[6] == 0);
    CHECK(make_order(cfg, CarrierOrdering::Reordered).carriers.front() == 7);
    CHECK(det.trace.visited_per_depth[0] == 1u + det.trace.restarts);
}

TEST_CASE("backtracks do not grow with SNR") {
    auto mean_backtracks = [](double snr) {
        auto cfg = blindeq::test::config(16, 3, snr, Constellation::bpsk());
        double total = 0.0;
        for (std::uint64_t s = 0; s < 500; ++s) {
            const auto inst = blindeq::test::draw_instance(cfg, 49, s);
            total += static_cast<double>(detect(inst.observed.received, cfg, RlsVariant::Exact).trace.backtracks);
        }
        return total / 500.0;
    };
    const double b10 = mean_backtracks(10.0);
    const double b20 = mean_backtracks(20.0);
    const double b30 = mean_backtracks(30.0);
    CHECK(b20 <= b10);
    CHECK(b30 <= b20);
}

TEST_CASE("channel estimate error falls with SNR") {
    std::vector<double> nmse;
    for (double snr : {10.0, 20.0, 30.0}) {
        auto cfg = blindeq::test::config(16, 3, snr, Constellation::qam4());
        double err = 0.0, power = 0.0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto inst = blindeq::test::draw_instance(cfg, 50, s);
            const auto det = detect(inst.observed.received, cfg, RlsVariant::Exact);
            for (std::size_t k = 0; k < 4; ++k) {
                err += std::norm(det.channel_estimate[k] - inst.channel.taps[k]);
                power += std::norm(inst.channel.taps[k]);
            }
        }
        nmse.push_back(err / power);
    }
    CHECK(nmse[1] < nmse[0]);
    CHECK(nmse[2] < nmse[1]);
}

}  // TEST_SUITE
