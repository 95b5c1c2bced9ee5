#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace microprobe {

// Shared tokenization used by the consistency metrics and the diversity
// selector: lowercase, split on whitespace, strip surrounding punctuation.
// Tokens that are pure punctuation vanish.
std::vector<std::string> tokenize(std::string_view text);

std::set<std::string> token_set(std::string_view text);

// Raw whitespace-delimited chunk count (no lowercasing or stripping).
std::size_t whitespace_token_count(std::string_view text);

// Number of non-blank segments after splitting on '.', '!' and '?'.
std::size_t sentence_count(std::string_view text);

// |A∩B| / |A∪B|; two empty sets score 1.
double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace microprobe
