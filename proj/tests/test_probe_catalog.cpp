#include "doctest.h"

#include <string>
#include <vector>

#include "microprobe/probe_catalog.hpp"

using namespace microprobe;

namespace {

std::string line(const std::string& id, const std::string& cat, const std::string& text) {
    return R"({"id":")" + id + R"(","text":")" + text + R"(","category":")" + cat + "\"}\n";
}

std::string small_pool_text() {
    std::string s;
    const char* cats[] = {"factual_knowledge", "logical_reasoning", "ethical_scenarios",
                          "ambiguous_scenarios", "edge_cases"};
    int n = 0;
    for (const auto* c : cats) {
        for (int i = 0; i < 2; ++i) {
            s += line("p" + std::to_string(n++), c, "prompt number " + std::to_string(n));
        }
    }
    return s;
}

}  // namespace

TEST_CASE("pool_checksum matches the reference md5 vectors") {
    CHECK(pool_checksum("") == "d41d8cd98f00b204e9800998ecf8427e");
    CHECK(pool_checksum("abc") == "900150983cd24fb0d6963f7d28e17f72");
    CHECK(pool_checksum("abc") == pool_checksum("abc"));
    CHECK(pool_checksum("abc\ndef") != pool_checksum("def\nabc"));
}

TEST_CASE("parse_pool reads records and tallies categories") {
    const auto pool = parse_pool(small_pool_text(), "mem");
    CHECK(pool.size() == 10);
    CHECK(pool.checksum == pool_checksum(small_pool_text()));
    CHECK(pool.source_path == "mem");
    const auto counts = pool.category_counts();
    for (auto c : kAllCategories) CHECK(counts[c] == 2);
    CHECK(counts.total() == 10);
}

TEST_CASE("parse then serialize round-trips") {
    std::string text = small_pool_text();
    text += R"({"id":"x1","text":"tagged","category":"edge_cases","domain":"finance","difficulty":0.25})"
            "\n";
    const auto pool = parse_pool(text, "mem");
    const auto again = parse_pool(serialize_pool(pool), "mem2");
    REQUIRE(again.size() == pool.size());
    CHECK(again.probes == pool.probes);
    CHECK(again.probes.back().domain_tag == "finance");
    CHECK(again.probes.back().difficulty == 0.25);
}

TEST_CASE("blank lines are skipped") {
    const auto pool = parse_pool("\n" + line("a", "edge_cases", "t") + "\n  \n", "mem");
    CHECK(pool.size() == 1);
}

TEST_CASE("parse errors carry the line number") {
    const std::string good = line("a", "edge_cases", "first");

    CHECK_THROWS_WITH_AS(parse_pool(good + "not json\n", "mem"),
                         doctest::Contains("line 2"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(good + "[1,2]\n", "mem"),
                         doctest::Contains("must be a JSON object"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(R"({"text":"x","category":"edge_cases"})" "\n", "mem"),
                         doctest::Contains("'id'"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(R"({"id":"a","category":"edge_cases"})" "\n", "mem"),
                         doctest::Contains("'text'"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(R"({"id":"a","text":"  ","category":"edge_cases"})" "\n", "mem"),
                         doctest::Contains("empty text"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(R"({"id":"a","text":"x"})" "\n", "mem"),
                         doctest::Contains("'category'"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(good + line("b", "Humor", "joke"), "mem"),
                         doctest::Contains("unknown category label 'Humor'"), RunError);
    CHECK_THROWS_WITH_AS(
        parse_pool(R"({"id":"a","text":"x","category":"edge_cases","difficulty":1.5})" "\n", "mem"),
        doctest::Contains("out of range"), RunError);
    CHECK_THROWS_WITH_AS(parse_pool(good + line("a", "edge_cases", "again"), "mem"),
                         doctest::Contains("duplicate probe id 'a'"), RunError);
}

TEST_CASE("unknown keys: strict rejects, lenient warns") {
    const std::string rec =
        R"({"id":"a","text":"x","category":"edge_cases","mood":"cheerful"})" "\n";

    CHECK_THROWS_WITH_AS(parse_pool(rec, "mem", PoolParseMode::Strict),
                         doctest::Contains("unknown key 'mood'"), RunError);

    std::vector<std::string> warnings;
    const auto pool = parse_pool(rec, "mem", PoolParseMode::Lenient, &warnings);
    CHECK(pool.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("mood") != std::string::npos);
    CHECK(warnings[0].find("line 1") != std::string::npos);
}

TEST_CASE("empty input reports the empty-file checksum") {
    CHECK_THROWS_WITH_AS(parse_pool("", "mem"),
                         doctest::Contains("d41d8cd98f00b204e9800998ecf8427e"), RunError);
}

TEST_CASE("load_pool on a missing file") {
    CHECK_THROWS_AS(load_pool("/nonexistent/path/pool.jsonl"), RunError);
}

TEST_CASE("category_histogram counts absent categories as zero") {
    CHECK(category_histogram({}).total() == 0);

    std::vector<Probe> probes;
    Probe p;
    p.text = "t";
    p.id = "a";
    p.category = Category::FactualKnowledge;
    probes.push_back(p);
    p.id = "b";
    probes.push_back(p);
    p.id = "c";
    probes.push_back(p);
    p.id = "d";
    p.category = Category::EdgeCases;
    probes.push_back(p);

    const auto h = category_histogram(probes);
    CHECK(h[Category::FactualKnowledge] == 3);
    CHECK(h[Category::EdgeCases] == 1);
    CHECK(h[Category::LogicalReasoning] == 0);
    CHECK(h[Category::EthicalScenarios] == 0);
    CHECK(h[Category::AmbiguousScenarios] == 0);
    CHECK(h.total() == probes.size());
}

TEST_CASE("category labels round-trip") {
    for (auto c : kAllCategories) {
        CHECK(category_from_label(category_label(c)) == c);
    }
    CHECK_FALSE(category_from_label("Humor").has_value());
    CHECK_FALSE(category_from_label("FACTUAL_KNOWLEDGE").has_value());
    CHECK_FALSE(category_from_label("").has_value());
}
