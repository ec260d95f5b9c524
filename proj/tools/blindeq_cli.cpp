// blindeq: Monte-Carlo runner for the blind OFDM receiver.
//
//   blindeq run --spec spec.json
//   blindeq run --n 16 --l 3 --mod bpsk --snr 0:5:30 --trials 500 --receivers blind-exact,train --out results.csv
//   blindeq opcount --n 64 --l 15
//   blindeq figure fig3 --out fig3.csv
//
// Exit status: 0 success, 2 argument error, 3 too many numeric aborts, 1 other failures.

#include "blindeq/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitArgument = 2;
constexpr int kExitAbort = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot read spec file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        blindeq::write_text_atomic(out, text);
}

struct RunArgs {
    std::string spec_path;
    std::optional<std::size_t> n, l, pilot, trials;
    std::optional<std::string> mod, snr, receivers, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon, pdp_decay;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> max_evaluations;
    bool emit_node_counts = false;
    bool identity_prior = false;
    bool print_spec = false;
};

int do_run(const RunArgs& a) {
    blindeq::ExperimentSpec spec;
    if (!a.spec_path.empty()) spec = blindeq::parse_spec_json(read_file(a.spec_path));
    if (a.n) spec.n = *a.n;
    if (a.l) spec.l = *a.l;
    if (a.pilot) spec.pilot = *a.pilot;
    if (a.trials) spec.trials = *a.trials;
    if (a.mod) spec.modulation = *a.mod;
    if (a.snr) spec.snr_db = blindeq::parse_snr_grid(*a.snr);
    if (a.receivers) spec.receivers = blindeq::parse_receivers(*a.receivers);
    if (a.out) spec.output = *a.out;
    if (a.seed) spec.seed = *a.seed;
    if (a.epsilon) spec.epsilon = *a.epsilon;
    if (a.pdp_decay) spec.pdp_decay = *a.pdp_decay;
    if (a.threads) spec.threads = *a.threads;
    if (a.max_evaluations) spec.max_evaluations = *a.max_evaluations;
    if (a.emit_node_counts) spec.emit_node_counts = true;
    if (a.identity_prior) spec.identity_prior = true;
    if (a.print_spec) {
        std::cout << blindeq::spec_to_json(spec) << '\n';
        return 0;
    }
    spec.validate();

    const std::string out = spec.output == "-" ? std::string() : spec.output;
    spec.output = out;
    const auto result = blindeq::run(spec);
    if (out.empty()) std::cout << blindeq::format_csv(result.rows);
    if (result.abort_threshold_exceeded) {
        std::cerr << "blindeq: more than 1% of trials aborted for at least one row\n";
        return kExitAbort;
    }
    return 0;
}

struct OpcountArgs {
    std::size_t n = 64;
    std::size_t l = 15;
    blindeq::OpCountOptions options;
    std::string out;
};

int do_opcount(const OpcountArgs& a) {
    emit(blindeq::format_opcount(blindeq::opcount_report(a.n, a.l, a.options)), a.out);
    return 0;
}

struct FigureArgs {
    std::string name;
    std::string out;
    bool list = false;
    blindeq::FigureOptions options;
};

int do_figure(FigureArgs a) {
    if (a.list || a.name.empty()) {
        for (const auto& name : blindeq::figure_names()) std::cout << name << '\n';
        return a.list ? 0 : kExitArgument;
    }
    if (a.name == "fig2") {
        emit(blindeq::emit_figure_data(a.name, a.options), a.out);
        return 0;
    }
    std::vector<blindeq::ResultRow> rows;
    bool aborted = false;
    for (const auto& spec : blindeq::figure_specs(a.name, a.options)) {
        auto result = blindeq::run(spec);
        aborted = aborted || result.abort_threshold_exceeded;
        for (auto& row : result.rows) rows.push_back(std::move(row));
    }
    emit(blindeq::format_csv(rows), a.out);
    if (aborted) {
        std::cerr << "blindeq: more than 1% of trials aborted for at least one row\n";
        return kExitAbort;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind maximum-likelihood OFDM receiver experiments"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Monte-Carlo BER/runtime sweep");
    run->add_option("--spec", run_args.spec_path, "JSON experiment spec")->check(CLI::ExistingFile);
    run->add_option("--n", run_args.n, "Subcarriers");
    run->add_option("--l", run_args.l, "Channel order (taps - 1)");
    run->add_option("--pilot", run_args.pilot, "Pinned pilot subcarrier (1-based)");
    run->add_option("--mod", run_args.mod, "bpsk, qam4 or qam16");
    run->add_option("--snr", run_args.snr, "SNR grid in dB: start:step:stop or a comma list");
    run->add_option("--trials", run_args.trials, "Monte-Carlo trials per SNR point");
    run->add_option("--receivers", run_args.receivers,
                    "Comma list of blind-exact, blind-fast-reordered, blind-fast-natural, train, perfect, exhaustive");
    run->add_option("--seed", run_args.seed, "Master seed");
    run->add_option("--out", run_args.out, "CSV output path (stdout if omitted)");
    run->add_option("--epsilon", run_args.epsilon, "Initial radius tail probability");
    run->add_option("--pdp-decay", run_args.pdp_decay, "Exponential power-delay-profile decay per tap");
    run->add_option("--threads", run_args.threads, "Worker threads (0 = hardware concurrency)");
    run->add_option("--max-evaluations", run_args.max_evaluations,
                    "RLS update budget per blind detection; exceeding it aborts the trial (0 = unlimited)");
    run->add_flag("--emit-node-counts", run_args.emit_node_counts, "Add per-depth node count columns");
    run->add_flag("--identity-prior", run_args.identity_prior, "Use R_h = I in the cost");
    run->add_flag("--print-spec", run_args.print_spec, "Print the resolved spec as JSON and exit");

    OpcountArgs op_args;
    auto* opcount = app.add_subcommand("opcount", "Closed-form and measured operation counts");
    opcount->add_option("--n", op_args.n, "Subcarriers");
    opcount->add_option("--l", op_args.l, "Channel order");
    opcount->add_option("--measure-trials", op_args.options.measure_trials, "Instrumented trials (0 = formulas only)");
    opcount->add_option("--snr", op_args.options.measure_snr_db, "SNR in dB for instrumented trials");
    opcount->add_option("--mod", op_args.options.modulation, "Modulation for instrumented trials");
    opcount->add_option("--seed", op_args.options.seed, "Seed for instrumented trials");
    opcount->add_option("--out", op_args.out, "CSV output path (stdout if omitted)");

    FigureArgs fig_args;
    auto* figure = app.add_subcommand("figure", "Regenerate the data behind a figure");
    figure->add_option("name", fig_args.name, "fig2 .. fig10");
    figure->add_option("--out", fig_args.out, "CSV output path (stdout if omitted)");
    figure->add_flag("--full", fig_args.options.full, "500 trials per point instead of 50");
    figure->add_option("--trials", fig_args.options.trials, "Explicit trial count");
    figure->add_option("--threads", fig_args.options.threads, "Worker threads (0 = hardware concurrency)");
    figure->add_option("--seed", fig_args.options.seed, "Master seed");
    figure->add_flag("--list", fig_args.list, "List figure names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgument;
    }

    try {
        if (*run) return do_run(run_args);
        if (*opcount) return do_opcount(op_args);
        if (*figure) return do_figure(fig_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "blindeq: " << e.what() << '\n';
        return kExitArgument;
    } catch (const std::exception& e) {
        std::cerr << "blindeq: " << e.what() << '\n';
        return 1;
    }
    return kExitArgument;
}
