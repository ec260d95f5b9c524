#ifndef BLINDEQ_HARNESS_HPP
#define BLINDEQ_HARNESS_HPP

/**
 * @file harness.hpp
 * @brief Seeded Monte-Carlo experiments over SNR, modulation and receiver.
 *
 * Trial t draws its channel, data and noise from RngStream(seed, t) and the
 * same draws are reused at every SNR point and by every receiver, so results
 * do not depend on the number of worker threads.
 */

#include "blindeq/ofdm_model.hpp"
#include "blindeq/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blindeq {

enum class Receiver { BlindExact, BlindFastReordered, BlindFastNatural, Train, Perfect, Exhaustive };

std::string_view to_string(Receiver r);
/// Accepts the CLI names: blind-exact, blind-fast-reordered, blind-fast-natural, train, perfect, exhaustive.
Receiver parse_receiver(std::string_view name);
std::vector<Receiver> parse_receivers(std::string_view comma_list);

/// "a:step:b" (inclusive) or a comma-separated list of dB values.
std::vector<double> parse_snr_grid(std::string_view text);

struct ExperimentSpec {
    std::size_t n = 16;
    std::size_t l = 3;
    std::string modulation = "bpsk";
    double pdp_decay = 0.2;
    bool normalize_pdp = true;
    bool identity_prior = false;
    std::size_t pilot = 1;
    double epsilon = 0.01;
    std::vector<double> snr_db{0, 5, 10, 15, 20, 25, 30};
    std::size_t trials = 500;
    std::vector<Receiver> receivers{Receiver::BlindExact};
    std::uint64_t seed = 42;
    std::string output;
    bool emit_node_counts = false;
    unsigned threads = 0;          ///< 0 = hardware concurrency
    bool keep_detections = false;  ///< retain every detected sequence in RunResult
    /// Per-detection RLS update budget for the blind receivers; exceeding it counts as an abort (0 = unlimited).
    std::uint64_t max_evaluations = 0;

    /// Throws std::invalid_argument on inconsistent fields.
    void validate() const;
    SystemConfig config_at(double snr_db) const;
};

/// Parses the JSON form of ExperimentSpec (keys mirror the field names).
ExperimentSpec parse_spec_json(std::string_view text);
std::string spec_to_json(const ExperimentSpec& spec);

struct ResultRow {
    Receiver receiver = Receiver::BlindExact;
    std::string modulation;
    std::size_t n = 0;
    std::size_t l = 0;
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    double ber = 0.0;
    double mean_runtime_s = 0.0;
    double p95_runtime_s = 0.0;
    double mean_backtracks = 0.0;
    double mean_nodes_per_subcarrier = 0.0;
    double mean_evaluations = 0.0;  ///< RLS updates per OFDM symbol
    std::uint64_t restarts = 0;
    std::size_t aborted = 0;
    std::uint64_t seed = 0;
    std::vector<double> mean_nodes_per_depth;  ///< filled when emit_node_counts is set
};

struct TrialDetection {
    Receiver receiver;
    std::size_t snr_index;
    std::size_t trial;
    SymbolSequence symbols;
};

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<TrialDetection> detections;  ///< only with keep_detections
    bool abort_threshold_exceeded = false;   ///< some row aborted more than 1% of its trials
};

/// Number of pilot subcarriers a receiver does not score.
std::size_t pilot_count(Receiver r, const SystemConfig& config);

RunResult run(const ExperimentSpec& spec);

inline constexpr std::string_view kCsvSchemaLine = "# blindeq-results v1";

/// CSV text; runtime columns are blanked when include_runtime is false.
std::string format_csv(const std::vector<ResultRow>& rows, bool include_runtime = true);
/// Writes via a temporary file and rename. Throws std::runtime_error on I/O failure.
void write_text_atomic(const std::string& path, const std::string& text);

// ---------------------------------------------------------------------------
// Operation counts
// ---------------------------------------------------------------------------

struct OpCountRow {
    std::string algorithm;
    std::uint64_t mults_per_iteration = 0;
    std::uint64_t adds_per_iteration = 0;
    std::uint64_t divs_per_iteration = 0;
    std::uint64_t total_mults = 0;  ///< per OFDM symbol without backtracking
    std::uint64_t total_adds = 0;
    /// Mean RLS updates per OFDM symbol in instrumented runs (unset if not measured).
    std::optional<double> measured_updates;
    std::optional<double> measured_mults;
    std::optional<double> measured_adds;
};

struct OpCountReport {
    std::size_t n = 0;
    std::size_t l = 0;
    std::vector<OpCountRow> rows;
};

struct OpCountOptions {
    std::size_t measure_trials = 0;  ///< 0 = closed forms only
    double measure_snr_db = 30.0;
    std::string modulation = "bpsk";
    std::uint64_t seed = 42;
};

std::uint64_t exact_rls_mults(std::size_t l);
std::uint64_t exact_rls_adds(std::size_t l);
std::uint64_t fast_rls_mults(std::size_t l);
std::uint64_t fast_rls_adds(std::size_t l);
std::uint64_t training_mults(std::size_t l);
std::uint64_t training_adds(std::size_t l);

/// Rows: blind exact, blind with carrier reordering, training based.
OpCountReport opcount_report(std::size_t n, std::size_t l, const OpCountOptions& options = {});
/// Only the row for one blind variant.
OpCountRow opcount_report(const SystemConfig& config, RlsVariant variant, const OpCountOptions& options = {});
std::string format_opcount(const OpCountReport& report);

// ---------------------------------------------------------------------------
// Figure catalog
// ---------------------------------------------------------------------------

struct FigureOptions {
    bool full = false;  ///< 500 trials instead of the reduced count
    std::optional<std::size_t> trials;
    unsigned threads = 0;
    std::uint64_t seed = 42;
};

std::vector<std::string> figure_names();
/// Monte-Carlo specs behind a figure (fig10 has one per modulation). Throws std::invalid_argument for unknown names.
std::vector<ExperimentSpec> figure_specs(std::string_view name, const FigureOptions& options = {});
/// CSV text for a figure; fig2 is the column-correlation curve, the rest are result tables.
std::string emit_figure_data(std::string_view name, const FigureOptions& options = {});

}  // namespace blindeq

#endif  // BLINDEQ_HARNESS_HPP
