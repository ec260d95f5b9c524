#include "blindeq/baselines.hpp"

#include "blindeq/cost_engine.hpp"

#include <cmath>
#include <stdexcept>

namespace blindeq {

namespace {

// Depth-first enumeration with running Gram matrix and correlation vector,
// so each leaf only needs an (L+1)-sized solve.
class Enumerator {
public:
    Enumerator(std::span<const cdouble> received, const SystemConfig& config, const VisitOrder& order)
        : config_(config), taps_(config.taps()), prior_inverse_(inverse(config.channel_prior())) {
        const std::size_t n = config.n;
        for (std::size_t d = 0; d < n; ++d) {
            columns_.push_back(dft_column(order.carriers[d], n, config.l));
            observed_.push_back(received[order.carriers[d] - 1]);
            branches_.push_back(order.carriers[d] == config.pilot ? 1 : static_cast<int>(config.constellation.size()));
        }
        energy_ = squared_norm(received);
        grams_.assign(n + 1, ComplexMatrix(taps_, taps_));
        corrs_.assign(n + 1, ComplexVector(taps_));
        chosen_.assign(n, 0);
        best_.assign(n, 0);
    }

    void run() { descend(0); }

    const std::vector<int>& best() const { return best_; }
    double best_cost() const { return best_cost_; }
    std::uint64_t candidates() const { return candidates_; }

private:
    void descend(std::size_t depth) {
        if (depth == columns_.size()) {
            leaf();
            return;
        }
        const auto& a = columns_[depth].entries;
        for (int k = 0; k < branches_[depth]; ++k) {
            const cdouble x = config_.constellation.point(k);
            const double e = std::norm(x);
            const cdouble c = std::conj(x) * observed_[depth];
            ComplexMatrix& g = grams_[depth + 1];
            g = grams_[depth];
            ComplexVector& v = corrs_[depth + 1];
            v = corrs_[depth];
            for (std::size_t r = 0; r < taps_; ++r) {
                v[r] += c * a[r];
                for (std::size_t s = 0; s < taps_; ++s) g(r, s) += e * a[r] * std::conj(a[s]);
            }
            chosen_[depth] = k;
            descend(depth + 1);
        }
    }

    void leaf() {
        ++candidates_;
        const double rho = config_.rho;
        const ComplexMatrix& g = grams_.back();
        ComplexMatrix info = prior_inverse_;
        for (std::size_t r = 0; r < taps_; ++r)
            for (std::size_t s = 0; s < taps_; ++s) info(r, s) += rho * g(r, s);
        const auto& v = corrs_.back();
        const auto w = HermitianSolver(info).solve(v);
        const double cost = energy_ - rho * inner(v, w).real();
        if (!has_best_ || cost < best_cost_) {
            has_best_ = true;
            best_cost_ = cost;
            best_ = chosen_;
        }
    }

    const SystemConfig& config_;
    std::size_t taps_;
    ComplexMatrix prior_inverse_;
    std::vector<PartialDftColumn> columns_;
    std::vector<cdouble> observed_;
    std::vector<int> branches_;
    double energy_ = 0.0;
    std::vector<ComplexMatrix> grams_;
    std::vector<ComplexVector> corrs_;
    std::vector<int> chosen_;
    std::vector<int> best_;
    double best_cost_ = 0.0;
    bool has_best_ = false;
    std::uint64_t candidates_ = 0;
};

}  // namespace

ExhaustiveResult exhaustive_map(std::span<const cdouble> received, const SystemConfig& config,
                                const VisitOrder& order) {
    config.validate();
    if (received.size() != config.n) throw std::invalid_argument("exhaustive_map: received length differs from N");
    check_permutation(order, config.n);

    const double log_count = static_cast<double>(config.n - 1) * std::log2(static_cast<double>(config.constellation.size()));
    if (log_count > std::log2(static_cast<double>(kExhaustiveLimit)))
        throw std::invalid_argument("exhaustive_map: |Omega|^(N-1) exceeds the enumeration limit");

    Enumerator e(received, config, order);
    e.run();
    ExhaustiveResult out;
    out.symbols.assign(config.n, 0);
    for (std::size_t d = 0; d < config.n; ++d) out.symbols[order.carriers[d] - 1] = e.best()[d];
    out.cost = e.best_cost();
    out.candidates = e.candidates();
    return out;
}

ExhaustiveResult exhaustive_map(std::span<const cdouble> received, const SystemConfig& config) {
    return exhaustive_map(received, config, natural_order(config.n, config.pilot));
}

PilotScheme comb_pilots(const SystemConfig& config) {
    config.validate();
    const std::size_t count = config.taps();
    const std::size_t spacing = config.n / count;
    PilotScheme scheme;
    for (std::size_t k = 0; k < count; ++k)
        scheme.indices.push_back((config.pilot - 1 + k * spacing) % config.n + 1);
    scheme.symbols.assign(count, 0);
    return scheme;
}

SymbolSequence apply_pilots(SymbolSequence symbols, const PilotScheme& scheme) {
    for (std::size_t k = 0; k < scheme.indices.size(); ++k) symbols.at(scheme.indices[k] - 1) = scheme.symbols.at(k);
    return symbols;
}

ComplexVector train_estimate(std::span<const cdouble> received, const PilotScheme& scheme, const SystemConfig& config) {
    config.validate();
    if (received.size() != config.n) throw std::invalid_argument("train_estimate: received length differs from N");
    if (scheme.indices.size() != config.taps() || scheme.symbols.size() != scheme.indices.size())
        throw std::invalid_argument("train_estimate: need exactly L+1 pilots");

    const std::size_t p = scheme.indices.size();
    const std::size_t taps = config.taps();
    const ComplexMatrix prior = config.channel_prior();

    ComplexMatrix b(p, taps);  // rows X_p(j) a_j^H
    ComplexVector y(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto a = dft_column(scheme.indices[j], config.n, config.l);
        const cdouble x = config.constellation.point(scheme.symbols[j]);
        for (std::size_t k = 0; k < taps; ++k) b(j, k) = x * std::conj(a.entries[k]);
        y[j] = received[scheme.indices[j] - 1];
    }
    const ComplexMatrix r_bh = prior * b.adjoint();
    ComplexMatrix s = b * r_bh;
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) s(r, c) *= config.rho;
        s(r, r) += 1.0;
    }
    const auto z = HermitianSolver(s).solve(y);
    ComplexVector h = r_bh * z;
    const double amp = std::sqrt(config.rho);
    for (auto& v : h) v *= amp;
    return h;
}

ChannelDetection train_detect(std::span<const cdouble> received, const PilotScheme& scheme, const SystemConfig& config) {
    const auto estimate = train_estimate(received, scheme, config);
    auto out = equalize_with_channel(received, estimate, config);
    for (std::size_t k = 0; k < scheme.indices.size(); ++k) out.symbols[scheme.indices[k] - 1] = scheme.symbols[k];
    return out;
}

}  // namespace blindeq
