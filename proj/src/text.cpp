#include "microprobe/text.hpp"

#include <algorithm>
#include <cctype>

namespace microprobe {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string normalize_token(std::string_view raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && is_punct(raw[b])) ++b;
    while (e > b && is_punct(raw[e - 1])) --e;
    std::string out(raw.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) {
            std::string tok = normalize_token(text.substr(start, i - start));
            if (!tok.empty()) out.push_back(std::move(tok));
        }
    }
    return out;
}

std::set<std::string> token_set(std::string_view text) {
    auto toks = tokenize(text);
    return {toks.begin(), toks.end()};
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::size_t sentence_count(std::string_view text) {
    std::size_t count = 0;
    bool blank = true;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (!blank) ++count;
            blank = true;
        } else if (!is_space(c)) {
            blank = false;
        }
    }
    if (!blank) ++count;
    return count;
}

double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace microprobe
