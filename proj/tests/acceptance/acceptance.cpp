// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "blindeq/baselines.hpp"
#include "blindeq/cost_engine.hpp"
#include "blindeq/harness.hpp"
#include "blindeq/numerics.hpp"
#include "blindeq/search.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace blindeq;

namespace {

// Pinned tolerances and limits.
constexpr double kRadiusLo = 203.0;
constexpr double kRadiusHi = 205.0;
constexpr double kIdentityTol = 1e-9;
constexpr double kOrthogonalityTol = 1e-9;
constexpr double kFastBerFactor = 1.5;
constexpr double kNodeBound = 1.1;
constexpr double kFloorDecay = 0.5;
constexpr std::uint64_t kLargeBudget = 2'000'000;  // RLS updates per detection before a trial counts as aborted

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> body;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

SystemConfig make_config(std::size_t n, std::size_t l, double snr_db, Constellation c) {
    SystemConfig cfg;
    cfg.n = n;
    cfg.l = l;
    cfg.rho = db_to_linear(snr_db);
    cfg.constellation = std::move(c);
    return cfg;
}

const ResultRow& row_of(const RunResult& r, Receiver rx, double snr) {
    for (const auto& row : r.rows)
        if (row.receiver == rx && row.snr_db == snr) return row;
    throw std::logic_error("missing result row");
}

Outcome radius_constant() {
    const double r = chi_square_quantile(0.01, 160);
    return {r >= kRadiusLo && r <= kRadiusHi, fmt("r = %.6f", r)};
}

Outcome recursion_identity() {
    double worst = 0.0;
    std::size_t count = 0;
    for (const auto& c : {Constellation::bpsk(), Constellation::qam4(), Constellation::qam16()}) {
        const auto cfg = make_config(16, 3, 15.0, c);
        const auto cols = dft_columns(16, 3);
        for (std::uint64_t s = 0; s < 200; ++s) {
            RngStream rng(42, s);
            const auto ch = sample_channel(cfg, rng);
            const auto x = draw_data(cfg, rng);
            const auto obs = synthesize(cfg, x, ch.taps, rng);
            const auto data = cfg.constellation.modulate(x);
            auto state = rls_init(cfg, RlsVariant::Exact);
            for (std::size_t j = 0; j < 16; ++j) state.absorb(data[j], obs.received[j], cols[j], cfg.rho);
            const double batch = batch_map_cost(data, obs.received, cols, cfg.channel_prior(), cfg.rho);
            worst = std::max(worst, std::abs(state.cost() - batch) / batch);
            ++count;
        }
    }
    return {worst < kIdentityTol, fmt("%zu instances, max relative error %.3e", count, worst)};
}

Outcome optimality_oracle() {
    const auto cfg = make_config(8, 1, 20.0, Constellation::bpsk());
    std::size_t match = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        RngStream rng(42, s);
        const auto ch = sample_channel(cfg, rng);
        const auto x = draw_data(cfg, rng);
        const auto obs = synthesize(cfg, x, ch.taps, rng);
        const auto det = detect(obs.received, cfg, RlsVariant::Exact);
        const auto oracle = exhaustive_map(obs.received, cfg);
        match += det.symbols == oracle.symbols;
    }
    return {match == 100, fmt("%zu/100 match exhaustive MAP", match)};
}

Outcome orthogonality() {
    double worst = 0.0;
    for (std::size_t m = 1; m <= 15; ++m) worst = std::max(worst, column_correlation(1, 1 + 4 * m, 64, 15));
    const auto csv = emit_figure_data("fig2");
    std::istringstream in(csv);
    std::string line;
    std::size_t rows = 0;
    double peak = 0.0;
    std::size_t peak_at = 0;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const double v = std::stod(line.substr(comma + 1));
        ++rows;
        if (v > peak) {
            peak = v;
            peak_at = std::stoul(line.substr(0, comma));
        }
    }
    const bool ok = worst < kOrthogonalityTol && rows == 64 && peak_at == 1 && std::abs(peak - 16.0) < 1e-9;
    return {ok, fmt("max |corr| over stride-4 columns %.3e, curve %zu points, peak %.6g at i=%zu", worst, rows, peak,
                    peak_at)};
}

Outcome fast_fidelity() {
    ExperimentSpec spec;
    spec.modulation = "qam4";
    spec.trials = 500;
    spec.snr_db = {10, 20, 30};
    spec.receivers = {Receiver::BlindExact, Receiver::BlindFastReordered, Receiver::BlindFastNatural};
    const auto r = run(spec);
    Outcome out;
    for (double snr : spec.snr_db) {
        const auto& ex = row_of(r, Receiver::BlindExact, snr);
        const auto& fr = row_of(r, Receiver::BlindFastReordered, snr);
        const bool ok = fr.ber <= kFastBerFactor * ex.ber;
        out.pass = out.pass && ok;
        out.detail += fmt("%gdB exact %.3e fast %.3e ratio %.2f%s; ", snr, ex.ber, fr.ber,
                          ex.ber > 0 ? fr.ber / ex.ber : INFINITY, ok ? "" : " (over)");
    }
    const auto& nat = row_of(r, Receiver::BlindFastNatural, 30);
    const auto& fr30 = row_of(r, Receiver::BlindFastReordered, 30);
    const bool worse = nat.ber > fr30.ber;
    out.pass = out.pass && worse;
    out.detail += fmt("natural order at 30dB %.3e%s", nat.ber, worse ? " (worse)" : " (not worse)");
    return out;
}

Outcome high_snr_complexity() {
    ExperimentSpec spec;
    spec.trials = 500;
    spec.snr_db = {10, 20, 30};
    spec.receivers = {Receiver::BlindExact};
    spec.threads = 1;
    const auto r = run(spec);
    const auto& a = r.rows[0];
    const auto& b = r.rows[1];
    const auto& c = r.rows[2];
    const bool nodes_ok = c.mean_nodes_per_subcarrier <= kNodeBound;
    const bool time_ok = a.mean_runtime_s > b.mean_runtime_s && b.mean_runtime_s > c.mean_runtime_s;
    return {nodes_ok && time_ok,
            fmt("nodes/subcarrier %.4f %.4f %.4f (bound %.1f at 30dB), runtime us %.1f %.1f %.1f",
                a.mean_nodes_per_subcarrier, b.mean_nodes_per_subcarrier, c.mean_nodes_per_subcarrier, kNodeBound,
                a.mean_runtime_s * 1e6, b.mean_runtime_s * 1e6, c.mean_runtime_s * 1e6)};
}

Outcome no_error_floor(bool full) {
    ExperimentSpec spec;
    spec.n = 64;
    spec.l = 15;
    spec.modulation = "qam4";
    spec.trials = full ? 500 : 100;
    spec.snr_db = full ? std::vector<double>{5, 10, 15, 20, 25, 30, 35, 40, 45} : std::vector<double>{15, 25, 35, 45};
    spec.receivers = {Receiver::BlindFastReordered};
    spec.max_evaluations = kLargeBudget;
    const auto r = run(spec);
    const double resolution = 1.0 / (static_cast<double>(spec.trials) * 63.0 * 2.0);
    Outcome out;
    out.pass = !r.abort_threshold_exceeded;
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const auto& row = r.rows[k];
        if (row.bits == 0)
            out.detail += fmt("%gdB ber n/a aborted %zu/%zu; ", row.snr_db, row.aborted, row.trials);
        else
            out.detail += fmt("%gdB ber %.3e aborted %zu/%zu; ", row.snr_db, row.ber, row.aborted, row.trials);
        if (k == 0) continue;
        const double prev = r.rows[k - 1].ber;
        const bool ok = row.ber < kFloorDecay * prev || row.ber < resolution;
        out.pass = out.pass && ok;
    }
    if (r.abort_threshold_exceeded)
        out.detail += fmt("over 1%% of searches exceeded %llu RLS updates", static_cast<unsigned long long>(kLargeBudget));
    return out;
}

Outcome opcounts() {
    const auto rep = opcount_report(64, 15);
    const auto& ex = rep.rows[0];
    const auto& fr = rep.rows[1];
    const bool ok = ex.total_mults == 54848 && ex.total_adds == 33856 && ex.mults_per_iteration == 857 &&
                    ex.adds_per_iteration == 529 && fr.total_mults == 4672 && fr.total_adds == 2176;
    return {ok, fmt("exact %llu/%llu (per iteration %llu/%llu), reordered %llu/%llu",
                    static_cast<unsigned long long>(ex.total_mults), static_cast<unsigned long long>(ex.total_adds),
                    static_cast<unsigned long long>(ex.mults_per_iteration),
                    static_cast<unsigned long long>(ex.adds_per_iteration),
                    static_cast<unsigned long long>(fr.total_mults), static_cast<unsigned long long>(fr.total_adds))};
}

Outcome determinism() {
    ExperimentSpec spec;
    spec.modulation = "qam4";
    spec.trials = 60;
    spec.snr_db = {5, 15, 25};
    spec.receivers = {Receiver::BlindExact, Receiver::BlindFastReordered, Receiver::BlindFastNatural, Receiver::Train,
                      Receiver::Perfect};
    spec.keep_detections = true;
    spec.emit_node_counts = true;
    spec.threads = 1;
    const auto a = run(spec);
    const auto b = run(spec);
    spec.threads = 8;
    const auto c = run(spec);
    const auto same = [](const RunResult& x, const RunResult& y) {
        if (format_csv(x.rows, false) != format_csv(y.rows, false)) return false;
        if (x.detections.size() != y.detections.size()) return false;
        for (std::size_t k = 0; k < x.detections.size(); ++k)
            if (x.detections[k].symbols != y.detections[k].symbols) return false;
        return true;
    };
    const bool repeat = same(a, b);
    const bool threads = same(a, c);
    return {repeat && threads && !a.detections.empty(),
            fmt("%zu detections; repeat %s, 1 vs 8 threads %s", a.detections.size(), repeat ? "identical" : "differ",
                threads ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
    bool full = false;
    for (int k = 1; k < argc; ++k) {
        if (std::strcmp(argv[k], "--full") == 0) {
            full = true;
        } else {
            std::fprintf(stderr, "usage: acceptance [--full]\n");
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {1, "radius constant", 1.0, radius_constant},
        {2, "recursion equals batch cost", 10.0, recursion_identity},
        {3, "search matches exhaustive MAP", 30.0, optimality_oracle},
        {4, "stride columns are orthogonal", 1.0, orthogonality},
        {5, "fast variant fidelity", 600.0, fast_fidelity},
        {6, "high-SNR complexity", 0.0, high_snr_complexity},
        {7, "no error floor at N=64", full ? 0.0 : 1800.0, [full] { return no_error_floor(full); }},
        {8, "operation counts", 1.0, opcounts},
        {9, "determinism", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            out = c.body();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs >= c.limit_s) {
            out.pass = false;
            out.detail += fmt(" [runtime limit %.0fs exceeded]", c.limit_s);
        }
        failures += !out.pass;
        std::printf("%s criterion %d (%s): %s [%.2fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.title,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
