#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace microprobe {

// The five reliability dimensions. Declaration order is load-bearing:
// quota remainders are handed out round-robin in this order.
enum class Category {
    FactualKnowledge,
    LogicalReasoning,
    EthicalScenarios,
    AmbiguousScenarios,
    EdgeCases,
};

inline constexpr std::size_t kCategoryCount = 5;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::FactualKnowledge, Category::LogicalReasoning,
    Category::EthicalScenarios, Category::AmbiguousScenarios,
    Category::EdgeCases,
};

std::string_view category_label(Category c);

// Accepts exactly the five canonical labels ("factual_knowledge", ...).
std::optional<Category> category_from_label(std::string_view label);

inline std::size_t category_index(Category c) { return static_cast<std::size_t>(c); }

// Count per category; absent categories are present with count 0.
struct CategoryCounts {
    std::array<std::size_t, kCategoryCount> counts{};

    std::size_t& operator[](Category c) { return counts[category_index(c)]; }
    std::size_t operator[](Category c) const { return counts[category_index(c)]; }

    std::size_t total() const {
        std::size_t t = 0;
        for (auto n : counts) t += n;
        return t;
    }

    bool operator==(const CategoryCounts&) const = default;
};

}  // namespace microprobe
