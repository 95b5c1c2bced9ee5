#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microprobe/category.hpp"
#include "microprobe/errors.hpp"

namespace microprobe {

struct Probe {
    std::string id;
    std::string text;
    Category category = Category::FactualKnowledge;
    std::optional<std::string> domain_tag;
    std::optional<double> difficulty;  // in [0,1] when present

    bool operator==(const Probe&) const = default;
};

// Immutable after load; safe to share across concurrent readers.
struct ProbePool {
    std::vector<Probe> probes;
    std::string source_path;
    std::string checksum;  // lowercase hex MD5 of the raw file bytes

    std::size_t size() const { return probes.size(); }
    CategoryCounts category_counts() const;
};

enum class PoolParseMode {
    Strict,   // unknown keys are an error
    Lenient,  // unknown keys produce a warning
};

// 32-char lowercase hex MD5 of the exact bytes.
std::string pool_checksum(std::string_view raw_bytes);

// One JSON object per line: id, text, category, optional domain, optional
// difficulty. Parse failures name the offending line.
ProbePool parse_pool(std::string_view content, std::string source_path,
                     PoolParseMode mode = PoolParseMode::Strict,
                     std::vector<std::string>* warnings = nullptr);

ProbePool load_pool(const std::string& path, PoolParseMode mode = PoolParseMode::Strict,
                    std::vector<std::string>* warnings = nullptr);

// Inverse of parse_pool, one record per line in pool order.
std::string serialize_pool(const ProbePool& pool);

CategoryCounts category_histogram(const std::vector<Probe>& probes);

}  // namespace microprobe
