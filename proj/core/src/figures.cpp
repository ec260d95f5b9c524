#include "blindeq/harness.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace blindeq {

namespace {

constexpr std::size_t kReducedTrials = 50;
constexpr std::size_t kFullTrials = 500;

struct Recipe {
    std::string_view name;
    std::size_t n;
    std::size_t l;
    std::vector<std::string_view> modulations;
    std::string_view snr;
    std::vector<Receiver> receivers;
};

const std::vector<Recipe>& catalog() {
    using R = Receiver;
    static const std::vector<Recipe> recipes = {
        {"fig3", 16, 3, {"bpsk"}, "0:5:30", {R::BlindExact, R::Exhaustive, R::Train, R::Perfect}},
        {"fig4", 16, 3, {"qam4"}, "0:5:30", {R::BlindExact, R::Train, R::Perfect}},
        {"fig5", 64, 15, {"qam4"}, "5:5:45", {R::BlindFastReordered, R::Train, R::Perfect}},
        {"fig6", 64, 15, {"qam16"}, "10:5:50", {R::BlindFastReordered, R::Train, R::Perfect}},
        {"fig7", 16, 3, {"bpsk"}, "0:5:30", {R::BlindExact, R::BlindFastNatural, R::BlindFastReordered}},
        {"fig8", 16, 3, {"qam4"}, "0:5:30", {R::BlindExact, R::BlindFastNatural, R::BlindFastReordered}},
        {"fig9", 16, 3, {"bpsk"}, "0:5:30", {R::BlindExact, R::Exhaustive, R::Train, R::Perfect}},
        {"fig10", 16, 3, {"bpsk", "qam4", "qam16"}, "0:5:30", {R::BlindExact}},
    };
    return recipes;
}

const Recipe& find_recipe(std::string_view name) {
    for (const auto& r : catalog())
        if (r.name == name) return r;
    throw std::invalid_argument("unknown figure '" + std::string(name) + "'");
}

std::string correlation_curve() {
    constexpr std::size_t n = 64;
    constexpr std::size_t l = 15;
    std::ostringstream os;
    os << "# blindeq-fig2 v1\n";
    os << "i,correlation\n";
    char buf[64];
    for (std::size_t i = 1; i <= n; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", column_correlation(i, 1, n, l));
        os << i << ',' << buf << '\n';
    }
    return os.str();
}

}  // namespace

std::vector<std::string> figure_names() {
    std::vector<std::string> names{"fig2"};
    for (const auto& r : catalog()) names.emplace_back(r.name);
    return names;
}

std::vector<ExperimentSpec> figure_specs(std::string_view name, const FigureOptions& options) {
    if (name == "fig2") return {};
    const Recipe& recipe = find_recipe(name);
    std::vector<ExperimentSpec> specs;
    for (const auto mod : recipe.modulations) {
        ExperimentSpec spec;
        spec.n = recipe.n;
        spec.l = recipe.l;
        spec.modulation = std::string(mod);
        spec.snr_db = parse_snr_grid(recipe.snr);
        spec.trials = options.trials ? *options.trials : (options.full ? kFullTrials : kReducedTrials);
        spec.receivers = recipe.receivers;
        spec.seed = options.seed;
        spec.threads = options.threads;
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::string emit_figure_data(std::string_view name, const FigureOptions& options) {
    if (name == "fig2") return correlation_curve();
    std::vector<ResultRow> rows;
    for (const auto& spec : figure_specs(name, options)) {
        auto result = run(spec);
        for (auto& row : result.rows) rows.push_back(std::move(row));
    }
    return format_csv(rows);
}

}  // namespace blindeq
