#include "microprobe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "microprobe/rng.hpp"
#include "microprobe/text.hpp"

namespace microprobe {

namespace {

SelectionResult finalize(SelectorMethod method, std::vector<Probe> probes, uint64_t seed,
                         std::size_t target) {
    SelectionResult result;
    result.method = method;
    result.probes = std::move(probes);
    result.seed = seed;
    result.target_size = target;
    result.counts = category_histogram(result.probes);
    result.entropy_bits = category_entropy(result.counts);
    return result;
}

void require_pool_supply(const ProbePool& pool, std::size_t n) {
    if (n == 0) throw ConfigError("selection target size must be >= 1");
    if (n > pool.size()) {
        throw ConfigError("selection target " + std::to_string(n) + " exceeds pool size " +
                          std::to_string(pool.size()));
    }
}

std::vector<std::vector<const Probe*>> group_by_category(const ProbePool& pool) {
    std::vector<std::vector<const Probe*>> groups(kCategoryCount);
    for (const auto& probe : pool.probes) {
        groups[category_index(probe.category)].push_back(&probe);
    }
    return groups;
}

void require_category_supply(const std::vector<std::vector<const Probe*>>& groups,
                             const std::array<std::size_t, kCategoryCount>& quotas) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        if (groups[c].size() < quotas[c]) {
            throw ConfigError(std::string("category '") +
                              std::string(category_label(kAllCategories[c])) + "' supply " +
                              std::to_string(groups[c].size()) + " < quota " +
                              std::to_string(quotas[c]) + " (shortfall " +
                              std::to_string(quotas[c] - groups[c].size()) + ")");
        }
    }
}

// Greedy farthest-point: anchor on the largest token set, then repeatedly
// take the candidate maximizing its minimum Jaccard distance to the picks.
// All ties break toward the lexicographically smaller id.
std::vector<const Probe*> diverse_subset(const std::vector<const Probe*>& candidates,
                                         std::size_t quota) {
    std::vector<std::set<std::string>> tokens(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        tokens[i] = token_set(candidates[i]->text);
    }

    std::vector<bool> picked(candidates.size(), false);
    std::vector<const Probe*> out;
    out.reserve(quota);
    std::vector<std::size_t> picked_idx;

    while (out.size() < quota) {
        std::size_t best = candidates.size();
        double best_score = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (picked[i]) continue;
            double score;
            if (picked_idx.empty()) {
                score = static_cast<double>(tokens[i].size());
            } else {
                score = 1.0;
                for (std::size_t j : picked_idx) {
                    score = std::min(score, 1.0 - jaccard_similarity(tokens[i], tokens[j]));
                }
            }
            if (best == candidates.size() || score > best_score ||
                (score == best_score && candidates[i]->id < candidates[best]->id)) {
                best = i;
                best_score = score;
            }
        }
        picked[best] = true;
        picked_idx.push_back(best);
        out.push_back(candidates[best]);
    }
    return out;
}

template <typename KeyFn>
SelectionResult select_top_n(SelectorMethod method, const ProbePool& pool, std::size_t n,
                             KeyFn key) {
    require_pool_supply(pool, n);
    std::vector<const Probe*> order;
    order.reserve(pool.size());
    for (const auto& probe : pool.probes) order.push_back(&probe);
    std::sort(order.begin(), order.end(), [&](const Probe* a, const Probe* b) {
        const double ka = key(*a);
        const double kb = key(*b);
        if (ka != kb) return ka > kb;
        return a->id < b->id;
    });
    std::vector<Probe> selected;
    selected.reserve(n);
    for (std::size_t i = 0; i < n; ++i) selected.push_back(*order[i]);
    return finalize(method, std::move(selected), 0, n);
}

}  // namespace

std::string_view selector_name(SelectorMethod m) {
    switch (m) {
        case SelectorMethod::Strategic: return "strategic";
        case SelectorMethod::Random: return "random";
        case SelectorMethod::Stratified: return "stratified";
        case SelectorMethod::Difficulty: return "difficulty";
        case SelectorMethod::Length: return "length";
        case SelectorMethod::Uncertainty: return "uncertainty";
    }
    return "unknown";
}

std::optional<SelectorMethod> selector_from_name(std::string_view name) {
    for (auto m : {SelectorMethod::Strategic, SelectorMethod::Random, SelectorMethod::Stratified,
                   SelectorMethod::Difficulty, SelectorMethod::Length,
                   SelectorMethod::Uncertainty}) {
        if (name == selector_name(m)) return m;
    }
    return std::nullopt;
}

std::array<std::size_t, kCategoryCount> category_quotas(std::size_t n) {
    std::array<std::size_t, kCategoryCount> quotas{};
    quotas.fill(n / kCategoryCount);
    const std::size_t remainder = n % kCategoryCount;
    for (std::size_t i = 0; i < remainder; ++i) ++quotas[i];
    return quotas;
}

SelectionResult select_strategic(const ProbePool& pool, std::size_t n, uint64_t seed) {
    if (n == 0) throw ConfigError("selection target size must be >= 1");
    if (pool.probes.empty()) throw ConfigError("pool is empty");
    const auto quotas = category_quotas(n);
    const auto groups = group_by_category(pool);
    require_category_supply(groups, quotas);

    std::vector<Probe> selected;
    selected.reserve(n);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        for (const Probe* p : diverse_subset(groups[c], quotas[c])) selected.push_back(*p);
    }

    Rng rng(derive_seed(seed, "select/strategic"));
    rng.shuffle(selected);
    return finalize(SelectorMethod::Strategic, std::move(selected), seed, n);
}

SelectionResult select_random(const ProbePool& pool, std::size_t n, uint64_t seed) {
    require_pool_supply(pool, n);
    Rng rng(derive_seed(seed, "select/random"));
    std::vector<Probe> selected;
    selected.reserve(n);
    for (std::size_t idx : rng.sample_indices(pool.size(), n)) {
        selected.push_back(pool.probes[idx]);
    }
    return finalize(SelectorMethod::Random, std::move(selected), seed, n);
}

SelectionResult select_stratified(const ProbePool& pool, std::size_t n, uint64_t seed) {
    if (n == 0) throw ConfigError("selection target size must be >= 1");
    if (pool.probes.empty()) throw ConfigError("pool is empty");
    const auto quotas = category_quotas(n);
    const auto groups = group_by_category(pool);
    require_category_supply(groups, quotas);

    Rng rng(derive_seed(seed, "select/stratified"));
    std::vector<Probe> selected;
    selected.reserve(n);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        for (std::size_t idx : rng.sample_indices(groups[c].size(), quotas[c])) {
            selected.push_back(*groups[c][idx]);
        }
    }
    rng.shuffle(selected);
    return finalize(SelectorMethod::Stratified, std::move(selected), seed, n);
}

SelectionResult select_by_difficulty(const ProbePool& pool, std::size_t n) {
    double max_len = 1.0;
    for (const auto& probe : pool.probes) {
        max_len = std::max(max_len, static_cast<double>(probe.text.size()));
    }
    return select_top_n(SelectorMethod::Difficulty, pool, n, [&](const Probe& p) {
        if (p.difficulty) return *p.difficulty;
        return static_cast<double>(p.text.size()) / max_len;
    });
}

SelectionResult select_by_length(const ProbePool& pool, std::size_t n) {
    return select_top_n(SelectorMethod::Length, pool, n, [](const Probe& p) {
        return static_cast<double>(whitespace_token_count(p.text));
    });
}

SelectionResult select_by_uncertainty(const ProbePool& pool,
                                      const std::map<std::string, double>& pilot_uncertainty,
                                      std::size_t n) {
    for (const auto& probe : pool.probes) {
        if (!pilot_uncertainty.count(probe.id)) {
            throw ConfigError("missing pilot uncertainty score for probe '" + probe.id + "'");
        }
    }
    return select_top_n(SelectorMethod::Uncertainty, pool, n,
                        [&](const Probe& p) { return pilot_uncertainty.at(p.id); });
}

double category_entropy(const CategoryCounts& histogram) {
    const std::size_t total = histogram.total();
    if (total == 0) throw std::invalid_argument("category_entropy: empty histogram");
    double bits = 0.0;
    for (std::size_t count : histogram.counts) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / static_cast<double>(total);
        bits -= p * std::log2(p);
    }
    return bits;
}

double information_efficiency_gain(double h_strategic, double h_baseline) {
    if (h_baseline <= 0.0) {
        throw std::invalid_argument("information_efficiency_gain: baseline entropy must be > 0");
    }
    return (h_strategic - h_baseline) / h_baseline;
}

}  // namespace microprobe
