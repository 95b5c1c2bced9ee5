#include "microprobe/category.hpp"

namespace microprobe {

std::string_view category_label(Category c) {
    switch (c) {
        case Category::FactualKnowledge: return "factual_knowledge";
        case Category::LogicalReasoning: return "logical_reasoning";
        case Category::EthicalScenarios: return "ethical_scenarios";
        case Category::AmbiguousScenarios: return "ambiguous_scenarios";
        case Category::EdgeCases: return "edge_cases";
    }
    return "unknown";
}

std::optional<Category> category_from_label(std::string_view label) {
    for (Category c : kAllCategories) {
        if (label == category_label(c)) return c;
    }
    return std::nullopt;
}

}  // namespace microprobe
