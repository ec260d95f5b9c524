#include "blindeq/harness.hpp"

#include "blindeq/baselines.hpp"
#include "blindeq/cost_engine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace blindeq {

namespace {

struct ReceiverName {
    Receiver receiver;
    std::string_view name;
};

constexpr ReceiverName kReceiverNames[] = {
    {Receiver::BlindExact, "blind-exact"},
    {Receiver::BlindFastReordered, "blind-fast-reordered"},
    {Receiver::BlindFastNatural, "blind-fast-natural"},
    {Receiver::Train, "train"},
    {Receiver::Perfect, "perfect"},
    {Receiver::Exhaustive, "exhaustive"},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\n\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\n\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

bool is_blind(Receiver r) {
    return r == Receiver::BlindExact || r == Receiver::BlindFastReordered || r == Receiver::BlindFastNatural;
}

}  // namespace

std::string_view to_string(Receiver r) {
    for (const auto& entry : kReceiverNames)
        if (entry.receiver == r) return entry.name;
    return "unknown";
}

Receiver parse_receiver(std::string_view name) {
    const std::string key = trim(name);
    for (const auto& entry : kReceiverNames)
        if (entry.name == key) return entry.receiver;
    throw std::invalid_argument("unknown receiver '" + key + "'");
}

std::vector<Receiver> parse_receivers(std::string_view comma_list) {
    std::vector<Receiver> out;
    std::size_t start = 0;
    while (start <= comma_list.size()) {
        const auto end = std::min(comma_list.find(',', start), comma_list.size());
        const auto item = trim(comma_list.substr(start, end - start));
        if (!item.empty()) out.push_back(parse_receiver(item));
        start = end + 1;
    }
    if (out.empty()) throw std::invalid_argument("receiver list is empty");
    return out;
}

std::vector<double> parse_snr_grid(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty()) throw std::invalid_argument("SNR grid is empty");
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::size_t start = 0;
        while (start <= s.size()) {
            const auto end = std::min(s.find(':', start), s.size());
            parts.push_back(parse_double(trim(std::string_view(s).substr(start, end - start))));
            start = end + 1;
        }
        if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0])
            throw std::invalid_argument("SNR grid must be start:step:stop with step > 0");
        const auto count = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9)) + 1;
        for (std::size_t k = 0; k < count; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[1]);
        return out;
    }
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = std::min(s.find(',', start), s.size());
        const auto item = trim(std::string_view(s).substr(start, end - start));
        if (!item.empty()) out.push_back(parse_double(item));
        start = end + 1;
    }
    return out;
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
    if (snr_db.empty()) throw std::invalid_argument("spec: SNR grid is empty");
    if (receivers.empty()) throw std::invalid_argument("spec: no receivers selected");
    for (double s : snr_db)
        if (!std::isfinite(s)) throw std::invalid_argument("spec: SNR values must be finite");
    const SystemConfig cfg = config_at(snr_db.front());
    cfg.validate();
    for (const auto r : receivers) {
        if (r != Receiver::Exhaustive) continue;
        const double log_count =
            static_cast<double>(n - 1) * std::log2(static_cast<double>(cfg.constellation.size()));
        if (log_count > std::log2(static_cast<double>(kExhaustiveLimit)))
            throw std::invalid_argument("spec: exhaustive receiver needs |Omega|^(N-1) <= 2^20");
    }
}

SystemConfig ExperimentSpec::config_at(double snr) const {
    SystemConfig cfg;
    cfg.n = n;
    cfg.l = l;
    cfg.rho = db_to_linear(snr);
    cfg.constellation = Constellation::from_name(modulation);
    cfg.pdp_decay = pdp_decay;
    cfg.normalize_pdp = normalize_pdp;
    cfg.identity_prior = identity_prior;
    cfg.pilot = pilot;
    cfg.epsilon = epsilon;
    return cfg;
}

ExperimentSpec parse_spec_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("spec JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("spec JSON must be an object");
    ExperimentSpec spec;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "n") spec.n = value.get<std::size_t>();
            else if (key == "l") spec.l = value.get<std::size_t>();
            else if (key == "modulation") spec.modulation = value.get<std::string>();
            else if (key == "pdp_decay") spec.pdp_decay = value.get<double>();
            else if (key == "normalize_pdp") spec.normalize_pdp = value.get<bool>();
            else if (key == "identity_prior") spec.identity_prior = value.get<bool>();
            else if (key == "pilot") spec.pilot = value.get<std::size_t>();
            else if (key == "epsilon") spec.epsilon = value.get<double>();
            else if (key == "snr_db") {
                spec.snr_db = value.is_string() ? parse_snr_grid(value.get<std::string>())
                                                : value.get<std::vector<double>>();
            } else if (key == "trials") spec.trials = value.get<std::size_t>();
            else if (key == "receivers") {
                if (value.is_string()) {
                    spec.receivers = parse_receivers(value.get<std::string>());
                } else {
                    spec.receivers.clear();
                    for (const auto& r : value) spec.receivers.push_back(parse_receiver(r.get<std::string>()));
                }
            } else if (key == "seed") spec.seed = value.get<std::uint64_t>();
            else if (key == "output") spec.output = value.get<std::string>();
            else if (key == "emit_node_counts") spec.emit_node_counts = value.get<bool>();
            else if (key == "threads") spec.threads = value.get<unsigned>();
            else if (key == "keep_detections") spec.keep_detections = value.get<bool>();
            else if (key == "max_evaluations") spec.max_evaluations = value.get<std::uint64_t>();
            else throw std::invalid_argument("spec JSON: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("spec JSON: ") + e.what());
    }
    return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["n"] = spec.n;
    j["l"] = spec.l;
    j["modulation"] = spec.modulation;
    j["pdp_decay"] = spec.pdp_decay;
    j["normalize_pdp"] = spec.normalize_pdp;
    j["identity_prior"] = spec.identity_prior;
    j["pilot"] = spec.pilot;
    j["epsilon"] = spec.epsilon;
    j["snr_db"] = spec.snr_db;
    j["trials"] = spec.trials;
    std::vector<std::string> names;
    for (const auto r : spec.receivers) names.emplace_back(to_string(r));
    j["receivers"] = names;
    j["seed"] = spec.seed;
    j["output"] = spec.output;
    j["emit_node_counts"] = spec.emit_node_counts;
    j["threads"] = spec.threads;
    j["keep_detections"] = spec.keep_detections;
    j["max_evaluations"] = spec.max_evaluations;
    return j.dump(2);
}

std::size_t pilot_count(Receiver r, const SystemConfig& config) {
    return r == Receiver::Train ? config.taps() : 1;
}

// ---------------------------------------------------------------------------
// Monte-Carlo run
// ---------------------------------------------------------------------------

namespace {

struct TrialOutcome {
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    double runtime = 0.0;
    std::uint64_t backtracks = 0;
    double nodes = 0.0;
    std::uint64_t evaluations = 0;
    unsigned restarts = 0;
    bool aborted = false;
    std::vector<std::uint64_t> visited;
    SymbolSequence symbols;
};

void score(TrialOutcome& out, const SymbolSequence& truth, const SymbolSequence& detected,
           const std::vector<bool>& is_pilot, const Constellation& constellation) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
        if (is_pilot[j]) continue;
        out.bits += constellation.bits_per_symbol();
        out.bit_errors += constellation.bit_distance(truth[j], detected[j]);
    }
}

class TrialRunner {
public:
    explicit TrialRunner(const ExperimentSpec& spec) : spec_(spec) {
        for (double snr : spec_.snr_db) configs_.push_back(spec_.config_at(snr));
        const SystemConfig& base = configs_.front();
        scheme_ = comb_pilots(base);
        blind_pilot_.assign(base.n, false);
        blind_pilot_[base.pilot - 1] = true;
        train_pilot_.assign(base.n, false);
        for (auto idx : scheme_.indices) train_pilot_[idx - 1] = true;

        const bool wants_exact =
            std::find(spec_.receivers.begin(), spec_.receivers.end(), Receiver::BlindExact) != spec_.receivers.end();
        tables_.resize(configs_.size());
        if (wants_exact && base.constellation.is_constant_modulus()) {
            const auto order = make_order(base, CarrierOrdering::Natural);
            for (std::size_t s = 0; s < configs_.size(); ++s)
                tables_[s] = std::make_unique<GainTable>(configs_[s], order.carriers);
        }
    }

    std::size_t outcomes_per_trial() const { return configs_.size() * spec_.receivers.size(); }

    void run_trial(std::size_t trial, std::span<TrialOutcome> out) const {
        RngStream rng(spec_.seed, trial);
        const SystemConfig& base = configs_.front();
        const auto channel = sample_channel(base, rng);
        const auto data = draw_data(base, rng);
        const auto noise = draw_noise(base.n, rng);
        const bool wants_train =
            std::find(spec_.receivers.begin(), spec_.receivers.end(), Receiver::Train) != spec_.receivers.end();
        const auto train_data = apply_pilots(data, scheme_);

        for (std::size_t s = 0; s < configs_.size(); ++s) {
            const SystemConfig& cfg = configs_[s];
            const auto observed = synthesize(cfg, data, channel.taps, noise);
            ObservedSymbol train_observed;
            if (wants_train) train_observed = synthesize(cfg, train_data, channel.taps, noise);

            for (std::size_t r = 0; r < spec_.receivers.size(); ++r) {
                TrialOutcome& o = out[s * spec_.receivers.size() + r];
                run_receiver(spec_.receivers[r], cfg, tables_[s].get(), observed, train_observed, o);
            }
        }
    }

private:
    void run_receiver(Receiver rx, const SystemConfig& cfg, const GainTable* table, const ObservedSymbol& observed,
                      const ObservedSymbol& train_observed, TrialOutcome& o) const {
        const auto started = std::chrono::steady_clock::now();
        const auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        };
        try {
            switch (rx) {
                case Receiver::BlindExact:
                case Receiver::BlindFastReordered:
                case Receiver::BlindFastNatural: {
                    DetectorSettings settings;
                    settings.variant = rx == Receiver::BlindExact ? RlsVariant::Exact : RlsVariant::Fast;
                    settings.ordering =
                        rx == Receiver::BlindFastReordered ? CarrierOrdering::Reordered : CarrierOrdering::Natural;
                    settings.gain_table = rx == Receiver::BlindExact ? table : nullptr;
                    settings.max_evaluations = spec_.max_evaluations;
                    auto det = detect(observed.received, cfg, settings);
                    o.runtime = elapsed();
                    o.backtracks = det.trace.backtracks;
                    o.nodes = det.trace.mean_nodes_per_subcarrier();
                    o.evaluations = det.trace.evaluations();
                    o.restarts = det.trace.restarts;
                    if (spec_.emit_node_counts) o.visited = det.trace.visited_per_depth;
                    o.symbols = std::move(det.symbols);
                    score(o, observed.truth_symbols, o.symbols, blind_pilot_, cfg.constellation);
                    break;
                }
                case Receiver::Train: {
                    auto det = train_detect(train_observed.received, scheme_, cfg);
                    o.runtime = elapsed();
                    o.symbols = std::move(det.symbols);
                    score(o, train_observed.truth_symbols, o.symbols, train_pilot_, cfg.constellation);
                    break;
                }
                case Receiver::Perfect: {
                    auto det = equalize_perfect_csi(observed, cfg);
                    o.runtime = elapsed();
                    o.symbols = std::move(det.symbols);
                    score(o, observed.truth_symbols, o.symbols, blind_pilot_, cfg.constellation);
                    break;
                }
                case Receiver::Exhaustive: {
                    auto det = exhaustive_map(observed.received, cfg);
                    o.runtime = elapsed();
                    o.symbols = std::move(det.symbols);
                    score(o, observed.truth_symbols, o.symbols, blind_pilot_, cfg.constellation);
                    break;
                }
            }
        } catch (const NumericError&) {
            o = TrialOutcome{};
            o.aborted = true;
            o.runtime = elapsed();
        }
    }

    const ExperimentSpec& spec_;
    std::vector<SystemConfig> configs_;
    std::vector<std::unique_ptr<GainTable>> tables_;
    PilotScheme scheme_;
    std::vector<bool> blind_pilot_;
    std::vector<bool> train_pilot_;
};

double percentile95(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

RunResult run(const ExperimentSpec& spec) {
    spec.validate();
    const TrialRunner runner(spec);
    const std::size_t per_trial = runner.outcomes_per_trial();
    std::vector<TrialOutcome> outcomes(spec.trials * per_trial);

    unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, spec.trials));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= spec.trials || failed.load()) return;
            try {
                runner.run_trial(t, std::span<TrialOutcome>(outcomes).subspan(t * per_trial, per_trial));
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    RunResult result;
    const std::size_t nrx = spec.receivers.size();
    for (std::size_t r = 0; r < nrx; ++r) {
        for (std::size_t s = 0; s < spec.snr_db.size(); ++s) {
            ResultRow row;
            row.receiver = spec.receivers[r];
            row.modulation = spec.modulation;
            row.n = spec.n;
            row.l = spec.l;
            row.snr_db = spec.snr_db[s];
            row.trials = spec.trials;
            row.seed = spec.seed;
            std::vector<double> runtimes;
            runtimes.reserve(spec.trials);
            double backtracks = 0.0;
            double nodes = 0.0;
            double evaluations = 0.0;
            std::vector<double> depth_sum;
            if (spec.emit_node_counts && is_blind(row.receiver)) depth_sum.assign(spec.n, 0.0);
            for (std::size_t t = 0; t < spec.trials; ++t) {
                const TrialOutcome& o = outcomes[t * per_trial + s * nrx + r];
                runtimes.push_back(o.runtime);
                if (o.aborted) {
                    ++row.aborted;
                    continue;
                }
                row.bit_errors += o.bit_errors;
                row.bits += o.bits;
                backtracks += static_cast<double>(o.backtracks);
                nodes += o.nodes;
                evaluations += static_cast<double>(o.evaluations);
                row.restarts += o.restarts;
                for (std::size_t d = 0; d < depth_sum.size() && d < o.visited.size(); ++d)
                    depth_sum[d] += static_cast<double>(o.visited[d]);
                if (spec.keep_detections) result.detections.push_back({row.receiver, s, t, o.symbols});
            }
            const double ok = static_cast<double>(spec.trials - row.aborted);
            row.ber = row.bits ? static_cast<double>(row.bit_errors) / static_cast<double>(row.bits) : 0.0;
            double total_time = 0.0;
            for (double v : runtimes) total_time += v;
            row.mean_runtime_s = total_time / static_cast<double>(runtimes.size());
            row.p95_runtime_s = percentile95(runtimes);
            if (ok > 0) {
                row.mean_backtracks = backtracks / ok;
                row.mean_nodes_per_subcarrier = nodes / ok;
                row.mean_evaluations = evaluations / ok;
                for (double& v : depth_sum) v /= ok;
            }
            row.mean_nodes_per_depth = std::move(depth_sum);
            if (static_cast<double>(row.aborted) > 0.01 * static_cast<double>(spec.trials))
                result.abort_threshold_exceeded = true;
            result.rows.push_back(std::move(row));
        }
    }

    if (!spec.output.empty()) write_text_atomic(spec.output, format_csv(result.rows));
    return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows, bool include_runtime) {
    std::size_t depth_columns = 0;
    for (const auto& r : rows) depth_columns = std::max(depth_columns, r.mean_nodes_per_depth.size());

    std::ostringstream os;
    os << kCsvSchemaLine << '\n';
    os << "receiver,modulation,n,l,snr_db,trials,bit_errors,bits,ber,mean_runtime_s,p95_runtime_s,"
          "mean_backtracks,mean_nodes_per_subcarrier,mean_evaluations,restarts,aborted,seed";
    for (std::size_t d = 0; d < depth_columns; ++d) os << ",nodes_depth_" << d + 1;
    os << '\n';
    for (const auto& r : rows) {
        os << to_string(r.receiver) << ',' << r.modulation << ',' << r.n << ',' << r.l << ',' << num(r.snr_db) << ','
           << r.trials << ',' << r.bit_errors << ',' << r.bits << ',' << num(r.ber) << ','
           << (include_runtime ? num(r.mean_runtime_s) : "") << ',' << (include_runtime ? num(r.p95_runtime_s) : "")
           << ',' << num(r.mean_backtracks) << ',' << num(r.mean_nodes_per_subcarrier) << ','
           << num(r.mean_evaluations) << ',' << r.restarts << ',' << r.aborted << ',' << r.seed;
        for (std::size_t d = 0; d < depth_columns; ++d)
            os << ',' << num(d < r.mean_nodes_per_depth.size() ? r.mean_nodes_per_depth[d] : 0.0);
        os << '\n';
    }
    return os.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        f << text;
        f.flush();
        if (!f) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move results into '" + path + "'");
    }
}

// ---------------------------------------------------------------------------
// Operation counts
// ---------------------------------------------------------------------------

std::uint64_t exact_rls_mults(std::size_t l) { return 3 * l * l + 11 * l + 17; }
std::uint64_t exact_rls_adds(std::size_t l) { return 2 * l * l + 5 * l + 4; }
std::uint64_t fast_rls_mults(std::size_t l) { return 4 * l + 13; }
std::uint64_t fast_rls_adds(std::size_t l) { return 2 * l + 4; }
std::uint64_t training_mults(std::size_t l) { return 4 * l * l + 17 * l + 13; }
std::uint64_t training_adds(std::size_t l) { return 2 * l * l + 6 * l + 4; }

namespace {

OpCountRow blind_row(std::size_t n, std::size_t l, RlsVariant variant) {
    OpCountRow row;
    if (variant == RlsVariant::Exact) {
        row.algorithm = "blind-exact";
        row.mults_per_iteration = exact_rls_mults(l);
        row.adds_per_iteration = exact_rls_adds(l);
    } else {
        row.algorithm = "blind-fast-reordered";
        row.mults_per_iteration = fast_rls_mults(l);
        row.adds_per_iteration = fast_rls_adds(l);
    }
    row.divs_per_iteration = 3;
    row.total_mults = row.mults_per_iteration * n;
    row.total_adds = row.adds_per_iteration * n;
    return row;
}

void measure(OpCountRow& row, std::size_t n, std::size_t l, RlsVariant variant, const OpCountOptions& options) {
    if (options.measure_trials == 0) return;
    ExperimentSpec spec;
    spec.n = n;
    spec.l = l;
    spec.modulation = options.modulation;
    spec.snr_db = {options.measure_snr_db};
    spec.trials = options.measure_trials;
    spec.seed = options.seed;
    spec.threads = 1;
    spec.receivers = {variant == RlsVariant::Exact ? Receiver::BlindExact : Receiver::BlindFastReordered};
    const auto result = run(spec);
    const double updates = result.rows.front().mean_evaluations;
    row.measured_updates = updates;
    row.measured_mults = updates * static_cast<double>(row.mults_per_iteration);
    row.measured_adds = updates * static_cast<double>(row.adds_per_iteration);
}

}  // namespace

OpCountReport opcount_report(std::size_t n, std::size_t l, const OpCountOptions& options) {
    if (n == 0 || l + 1 >= n) throw std::invalid_argument("opcount: require L+1 < N");
    OpCountReport report;
    report.n = n;
    report.l = l;
    for (const auto variant : {RlsVariant::Exact, RlsVariant::Fast}) {
        auto row = blind_row(n, l, variant);
        measure(row, n, l, variant, options);
        report.rows.push_back(std::move(row));
    }
    OpCountRow train;
    train.algorithm = "train";
    train.mults_per_iteration = training_mults(l);
    train.adds_per_iteration = training_adds(l);
    train.total_mults = train.mults_per_iteration;
    train.total_adds = train.adds_per_iteration;
    report.rows.push_back(std::move(train));
    return report;
}

OpCountRow opcount_report(const SystemConfig& config, RlsVariant variant, const OpCountOptions& options) {
    config.validate();
    auto row = blind_row(config.n, config.l, variant);
    measure(row, config.n, config.l, variant, options);
    return row;
}

std::string format_opcount(const OpCountReport& report) {
    std::ostringstream os;
    os << "# blindeq-opcount v1\n";
    os << "algorithm,n,l,mults_per_iteration,adds_per_iteration,divs_per_iteration,total_mults,total_adds,"
          "measured_updates,measured_mults,measured_adds\n";
    const auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    for (const auto& r : report.rows) {
        os << r.algorithm << ',' << report.n << ',' << report.l << ',' << r.mults_per_iteration << ','
           << r.adds_per_iteration << ',' << r.divs_per_iteration << ',' << r.total_mults << ',' << r.total_adds << ','
           << opt(r.measured_updates) << ',' << opt(r.measured_mults) << ',' << opt(r.measured_adds) << '\n';
    }
    return os.str();
}

}  // namespace blindeq
