#include "blindeq/search.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <string>

namespace blindeq {

RadiusPolicy initial_radius(const SystemConfig& config) {
    config.validate();
    RadiusPolicy policy;
    policy.epsilon = config.epsilon;
    policy.dof = static_cast<unsigned>(2 * (config.n + config.l + 1));
    policy.initial = chi_square_quantile(policy.epsilon, policy.dof);
    return policy;
}

namespace {

void move_to_front(std::vector<std::size_t>& carriers, std::size_t pilot) {
    const auto it = std::find(carriers.begin(), carriers.end(), pilot);
    if (it == carriers.end()) throw std::invalid_argument("visit order: pilot subcarrier out of range");
    std::rotate(carriers.begin(), it, it + 1);
}

}  // namespace

VisitOrder carrier_order(std::size_t n, std::size_t l, std::size_t pilot) {
    if (n == 0 || l + 1 > n) throw std::invalid_argument("carrier_order: require L+1 <= N");
    VisitOrder order;
    order.stride = n / (l + 1);
    order.carriers.reserve(n);
    for (std::size_t offset = 1; offset <= order.stride; ++offset)
        for (std::size_t i = offset; i <= n; i += order.stride) order.carriers.push_back(i);
    move_to_front(order.carriers, pilot);
    return order;
}

VisitOrder natural_order(std::size_t n, std::size_t pilot) {
    VisitOrder order;
    order.carriers.resize(n);
    std::iota(order.carriers.begin(), order.carriers.end(), std::size_t{1});
    move_to_front(order.carriers, pilot);
    return order;
}

void check_permutation(const VisitOrder& order, std::size_t n) {
    if (order.carriers.size() != n) throw std::invalid_argument("visit order has the wrong length");
    std::vector<bool> seen(n + 1, false);
    for (const auto c : order.carriers) {
        if (c < 1 || c > n || seen[c]) throw std::invalid_argument("visit order is not a permutation");
        seen[c] = true;
    }
}

double SearchTrace::mean_nodes_per_subcarrier() const {
    if (visited_per_depth.empty()) return 0.0;
    const auto total = std::accumulate(visited_per_depth.begin(), visited_per_depth.end(), std::uint64_t{0});
    return static_cast<double>(total) / static_cast<double>(visited_per_depth.size());
}

std::uint64_t SearchTrace::evaluations() const {
    return std::accumulate(evaluated_per_depth.begin(), evaluated_per_depth.end(), std::uint64_t{0});
}

SearchTrace blind_search(std::span<const cdouble> received, const SystemConfig& config, RlsVariant variant,
                         const VisitOrder& order, const SearchOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    const std::size_t n = config.n;
    if (received.size() != n) throw std::invalid_argument("blind_search: received length differs from N");
    check_permutation(order, n);

    const GainTable* table = options.gain_table;
    if (table) {
        if (variant != RlsVariant::Exact) throw std::invalid_argument("blind_search: gain table requires the exact variant");
        if (table->size() != n || !std::equal(order.carriers.begin(), order.carriers.end(), table->order().begin()))
            throw std::invalid_argument("blind_search: gain table was built for a different visit order");
    }

    const auto& points = config.constellation.points();
    const int alphabet = static_cast<int>(points.size());

    std::vector<PartialDftColumn> columns;
    std::vector<cdouble> observed(n);
    std::vector<int> branches(n);
    columns.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        columns.push_back(dft_column(order.carriers[d], n, config.l));
        observed[d] = received[order.carriers[d] - 1];
        branches[d] = order.carriers[d] == config.pilot ? 1 : alphabet;
    }

    SearchTrace trace;
    trace.visited_per_depth.assign(n, 0);
    trace.evaluated_per_depth.assign(n, 0);
    trace.initial_radius = options.radius_override > 0.0 ? options.radius_override : initial_radius(config).initial;

    // stack[d] holds the state after absorbing depths 0..d-1; restoring is just
    // reading the parent slot again.
    std::vector<RlsState> stack(n + 1, rls_init(config, variant));
    std::vector<int> next(n, 0);
    std::vector<int> chosen(n, 0);
    std::vector<double> costs(n, 0.0);

    double radius = trace.initial_radius;
    bool found = false;
    std::vector<int> best(n, 0);
    std::uint64_t evaluations = 0;

    for (;;) {
        std::size_t depth = 0;
        next[0] = 0;
        for (;;) {
            if (next[depth] >= branches[depth]) {
                if (depth == 0) break;
                --depth;
                if (next[depth] < branches[depth]) ++trace.backtracks;
                continue;
            }
            const int k = next[depth]++;
            const cdouble symbol = points[static_cast<std::size_t>(k)];
            RlsState& child = stack[depth + 1];
            child = stack[depth];
            if (table)
                child.absorb(table->step(depth), symbol, observed[depth], columns[depth], config.rho);
            else
                child.absorb(symbol, observed[depth], columns[depth], config.rho);
            ++trace.evaluated_per_depth[depth];
            if (options.max_evaluations && ++evaluations > options.max_evaluations)
                throw SearchAborted("blind_search: evaluation budget of " + std::to_string(options.max_evaluations) +
                                    " RLS updates exhausted");

            const double cost = child.cost();
            if (!(cost <= radius)) continue;  // NaN and +inf are pruned here
            ++trace.visited_per_depth[depth];
            chosen[depth] = k;
            costs[depth] = cost;

            if (depth + 1 == n) {
                if (!found || cost < trace.cost) {
                    best = chosen;
                    trace.cost = cost;
                    trace.channel_estimate = child.estimate();
                    trace.path_costs = costs;
                }
                found = true;
                radius = cost;
                continue;
            }
            ++depth;
            next[depth] = 0;
        }
        if (found) break;
        if (trace.restarts >= options.max_doublings)
            throw SearchAborted("blind_search: radius doubled " + std::to_string(trace.restarts) +
                                " times without finding a sequence");
        radius *= 2.0;
        ++trace.restarts;
    }

    trace.final_radius = radius;
    trace.detected.assign(n, 0);
    for (std::size_t d = 0; d < n; ++d) trace.detected[order.carriers[d] - 1] = best[d];
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trace;
}

DetectorSettings default_settings(RlsVariant variant) {
    DetectorSettings s;
    s.variant = variant;
    s.ordering = variant == RlsVariant::Exact ? CarrierOrdering::Natural : CarrierOrdering::Reordered;
    return s;
}

VisitOrder make_order(const SystemConfig& config, CarrierOrdering ordering) {
    return ordering == CarrierOrdering::Reordered ? carrier_order(config.n, config.l, config.pilot)
                                                  : natural_order(config.n, config.pilot);
}

Detection detect(std::span<const cdouble> received, const SystemConfig& config, const DetectorSettings& settings) {
    const VisitOrder order = make_order(config, settings.ordering);
    SearchOptions options;
    options.max_doublings = settings.max_doublings;
    options.max_evaluations = settings.max_evaluations;
    options.gain_table = settings.variant == RlsVariant::Exact ? settings.gain_table : nullptr;
    Detection out;
    out.trace = blind_search(received, config, settings.variant, order, options);
    out.symbols = out.trace.detected;
    out.channel_estimate = out.trace.channel_estimate;
    return out;
}

Detection detect(std::span<const cdouble> received, const SystemConfig& config, RlsVariant variant) {
    return detect(received, config, default_settings(variant));
}

}  // namespace blindeq
