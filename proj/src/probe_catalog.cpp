#include "microprobe/probe_catalog.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace microprobe {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
    throw RunError("pool line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

CategoryCounts ProbePool::category_counts() const { return category_histogram(probes); }

std::string pool_checksum(std::string_view raw_bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(raw_bytes.data(), raw_bytes.size(), digest, &digest_len, EVP_md5(),
                   nullptr) != 1) {
        throw RunError("MD5 digest computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

ProbePool parse_pool(std::string_view content, std::string source_path, PoolParseMode mode,
                     std::vector<std::string>* warnings) {
    ProbePool pool;
    pool.source_path = std::move(source_path);
    pool.checksum = pool_checksum(content);

    std::set<std::string> seen_ids;
    std::istringstream lines{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (trim(line).empty()) continue;

        ordered_json rec = ordered_json::parse(line, nullptr, false);
        if (rec.is_discarded()) fail_line(line_no, "not valid JSON");
        if (!rec.is_object()) fail_line(line_no, "record must be a JSON object");

        Probe probe;
        if (!rec.contains("id") || !rec["id"].is_string()) {
            fail_line(line_no, "missing string field 'id'");
        }
        probe.id = rec["id"].get<std::string>();
        if (!rec.contains("text") || !rec["text"].is_string()) {
            fail_line(line_no, "missing string field 'text'");
        }
        probe.text = rec["text"].get<std::string>();
        if (trim(probe.text).empty()) {
            fail_line(line_no, "probe '" + probe.id + "' has empty text");
        }
        if (!rec.contains("category") || !rec["category"].is_string()) {
            fail_line(line_no, "missing string field 'category'");
        }
        const std::string label = rec["category"].get<std::string>();
        auto cat = category_from_label(label);
        if (!cat) fail_line(line_no, "unknown category label '" + label + "'");
        probe.category = *cat;

        if (rec.contains("domain")) {
            if (!rec["domain"].is_string()) fail_line(line_no, "'domain' must be a string");
            probe.domain_tag = rec["domain"].get<std::string>();
        }
        if (rec.contains("difficulty")) {
            if (!rec["difficulty"].is_number()) {
                fail_line(line_no, "'difficulty' must be a number");
            }
            const double d = rec["difficulty"].get<double>();
            if (d < 0.0 || d > 1.0) {
                fail_line(line_no, "'difficulty' out of range [0,1]");
            }
            probe.difficulty = d;
        }
        for (const auto& [key, value] : rec.items()) {
            (void)value;
            if (key == "id" || key == "text" || key == "category" || key == "domain" ||
                key == "difficulty") {
                continue;
            }
            if (mode == PoolParseMode::Strict) {
                fail_line(line_no, "unknown key '" + key + "'");
            }
            if (warnings) {
                warnings->push_back("pool line " + std::to_string(line_no) +
                                    ": ignoring unknown key '" + key + "'");
            }
        }

        if (!seen_ids.insert(probe.id).second) {
            fail_line(line_no, "duplicate probe id '" + probe.id + "'");
        }
        pool.probes.push_back(std::move(probe));
    }

    if (pool.probes.empty()) {
        throw RunError("pool '" + pool.source_path + "' contains no probes (checksum " +
                       pool.checksum + ")");
    }
    return pool;
}

ProbePool load_pool(const std::string& path, PoolParseMode mode,
                    std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot read pool file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pool(buf.str(), path, mode, warnings);
}

std::string serialize_pool(const ProbePool& pool) {
    std::string out;
    for (const auto& probe : pool.probes) {
        ordered_json rec;
        rec["id"] = probe.id;
        rec["text"] = probe.text;
        rec["category"] = std::string(category_label(probe.category));
        if (probe.domain_tag) rec["domain"] = *probe.domain_tag;
        if (probe.difficulty) rec["difficulty"] = *probe.difficulty;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

CategoryCounts category_histogram(const std::vector<Probe>& probes) {
    CategoryCounts counts;
    for (const auto& probe : probes) ++counts[probe.category];
    return counts;
}

}  // namespace microprobe
