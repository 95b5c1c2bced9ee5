#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microprobe/probe_catalog.hpp"

namespace microprobe {

enum class SelectorMethod {
    Strategic,
    Random,
    Stratified,
    Difficulty,
    Length,
    Uncertainty,
};

std::string_view selector_name(SelectorMethod m);
std::optional<SelectorMethod> selector_from_name(std::string_view name);

struct SelectionResult {
    SelectorMethod method = SelectorMethod::Strategic;
    std::vector<Probe> probes;
    uint64_t seed = 0;  // 0 for the deterministic (seedless) selectors
    std::size_t target_size = 0;
    CategoryCounts counts;
    double entropy_bits = 0.0;
};

// Per-category quotas for target size n: floor(n/5) each, remainder
// round-robin in category declaration order.
std::array<std::size_t, kCategoryCount> category_quotas(std::size_t n);

// Quota per category, greedy farthest-point diversity within each category
// (Jaccard distance on prompt token sets; anchor = largest token set, ties
// by id), result order shuffled to remove category ordering bias.
SelectionResult select_strategic(const ProbePool& pool, std::size_t n, uint64_t seed);

// Uniform sample without replacement.
SelectionResult select_random(const ProbePool& pool, std::size_t n, uint64_t seed);

// Same quotas as strategic; within-category choice is uniform.
SelectionResult select_stratified(const ProbePool& pool, std::size_t n, uint64_t seed);

// Difficulty descending; probes without a difficulty use prompt character
// length normalized by the pool maximum as a proxy. Ties by id.
SelectionResult select_by_difficulty(const ProbePool& pool, std::size_t n);

// Whitespace-token count descending, ties by id.
SelectionResult select_by_length(const ProbePool& pool, std::size_t n);

// Pilot uncertainty descending, ties by id. Every pool probe needs a score.
SelectionResult select_by_uncertainty(const ProbePool& pool,
                                      const std::map<std::string, double>& pilot_uncertainty,
                                      std::size_t n);

// Shannon entropy of the category distribution, in bits. Total must be >= 1.
double category_entropy(const CategoryCounts& histogram);

// (h_strategic - h_baseline) / h_baseline; h_baseline must be positive.
double information_efficiency_gain(double h_strategic, double h_baseline);

}  // namespace microprobe
