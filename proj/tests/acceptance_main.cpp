// Acceptance gate: ten end-to-end checks, one line of output each.
// Exits nonzero if any check fails or overruns its time budget.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "microprobe/model_gateway.hpp"
#include "microprobe/probe_catalog.hpp"
#include "microprobe/reliability_metrics.hpp"
#include "microprobe/rng.hpp"
#include "microprobe/selection.hpp"
#include "microprobe/stats_suite.hpp"
#include "microprobe/weight_learner.hpp"

using namespace microprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

ProbePool build_pool(const std::array<std::size_t, kCategoryCount>& per_category) {
    ProbePool pool;
    static const char* kFiller[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta"};
    for (Category c : kAllCategories) {
        const std::string label(category_label(c));
        for (std::size_t i = 0; i < per_category[category_index(c)]; ++i) {
            Probe p;
            p.id = label.substr(0, 2) + "-" + std::to_string(i);
            p.category = c;
            p.text = label + " case " + std::to_string(i) + " " + kFiller[i % 7] + " " +
                     kFiller[(i / 7) % 7] + " token" + std::to_string(i % 11);
            pool.probes.push_back(std::move(p));
        }
    }
    pool.source_path = "<generated>";
    pool.checksum = pool_checksum(serialize_pool(pool));
    return pool;
}

// --- small csv helpers for the committed oracle tables -----------------------

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::vector<double> parse_samples(const std::string& field) {
    std::vector<double> v;
    std::stringstream ss(field);
    std::string tok;
    while (ss >> tok) v.push_back(std::stod(tok));
    return v;
}

std::vector<std::vector<std::string>> read_table(const std::string& name) {
    const std::string path = std::string(MICROPROBE_SOURCE_DIR) + "/tests/data/" + name;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open oracle table " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(split_csv(line));
    }
    return rows;
}

// --- the ten checks -----------------------------------------------------------

Outcome check_entropy() {
    const ProbePool pool = build_pool({30, 30, 30, 30, 30});
    const SelectionResult sel = select_strategic(pool, 100, 42);
    bool balanced = true;
    for (Category c : kAllCategories) balanced = balanced && sel.counts[c] == 20;
    const bool ok = balanced && near(sel.entropy_bits, 2.321928094887362, 1e-9);
    return {ok, fmt("strategic n=100 entropy %.12f bits, 20 probes per category: %s",
                    sel.entropy_bits, balanced ? "yes" : "no")};
}

Outcome check_efficiency_gain() {
    const double gain = information_efficiency_gain(2.321928094887362, 2.009) * 100.0;
    return {near(gain, 15.6, 0.1), fmt("gain over 2.009-bit baseline = %.4f%%", gain)};
}

Outcome check_power() {
    const double p = power_two_sample(1.207, 40, 0.05);
    return {p >= 0.999, fmt("power(d=1.207, n=40, alpha=0.05) = %.6f", p)};
}

Outcome check_improvement_formula() {
    const double improvement = (0.186 - 0.145) / 0.145 * 100.0;
    return {near(improvement, 28.3, 0.1),
            fmt("(0.186 - 0.145)/0.145 = %+.4f%%", improvement)};
}

Outcome check_failure_detection() {
    // 10 of 200 probes sit in the failing category (5% prevalence); the
    // category quota at n=50 is exactly 10, so strategic must take them all.
    const ProbePool pool = build_pool({48, 48, 47, 47, 10});

    CategoryProfile base;
    base.response_noise = 0.35;
    ReliabilityProfile profile = ReliabilityProfile::uniform(base);
    profile.failure_rates[Category::EdgeCases] = 1.0;
    MockBackend backend(profile);

    GenerationParams params;
    params.k = 5;

    std::size_t wins = 0;
    bool coverage_ok = true;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        params.seed = derive_seed(trial, "acceptance/gen");
        const SelectionResult strategic = select_strategic(pool, 50, trial);
        const SelectionResult random = select_random(pool, 50, trial);
        coverage_ok = coverage_ok && strategic.counts[Category::EdgeCases] == 10;

        auto mean_composite = [&](const SelectionResult& sel) {
            double sum = 0.0;
            for (const Probe& p : sel.probes) {
                sum += assess_probe(backend.generate(p, params), LogprobAggregation::Mean)
                           .composite_consistency;
            }
            return sum / static_cast<double>(sel.probes.size());
        };
        if (mean_composite(strategic) > mean_composite(random)) ++wins;
    }
    const bool ok = wins >= 95 && coverage_ok;
    return {ok, fmt("strategic mean composite beat random in %zu/100 trials; "
                    "failing-category coverage 10/50 every trial: %s",
                    wins, coverage_ok ? "yes" : "no")};
}

Outcome check_statistical_oracles() {
    double welch_err = 0.0, mwu_err = 0.0, effect_err = 0.0, alpha_err = 0.0, cdf_err = 0.0;
    bool all_exact = true;

    const auto welch_rows = read_table("welch_oracle.csv");
    for (const auto& row : welch_rows) {
        const auto a = parse_samples(row[1]);
        const auto b = parse_samples(row[2]);
        const TestResult r = welch_t_test(a, b);
        welch_err = std::max(welch_err, std::fabs(r.statistic - std::stod(row[3])));
        welch_err = std::max(welch_err, std::fabs(r.p_value - std::stod(row[4])));
    }

    const auto mwu_rows = read_table("mwu_oracle.csv");
    for (const auto& row : mwu_rows) {
        const auto a = parse_samples(row[1]);
        const auto b = parse_samples(row[2]);
        const TestResult r = mann_whitney_u(a, b);
        all_exact = all_exact && r.exact;
        mwu_err = std::max(mwu_err, std::fabs(r.statistic - std::stod(row[3])));
        mwu_err = std::max(mwu_err, std::fabs(r.p_value - std::stod(row[4])));
    }

    const auto effect_rows = read_table("effect_size_oracle.csv");
    for (const auto& row : effect_rows) {
        const auto a = parse_samples(row[1]);
        const auto b = parse_samples(row[2]);
        const EffectSizes e = effect_sizes(a, b);
        effect_err = std::max(effect_err, std::fabs(e.cohens_d - std::stod(row[3])));
        effect_err = std::max(effect_err, std::fabs(e.hedges_g - std::stod(row[4])));
        effect_err = std::max(effect_err, std::fabs(e.glass_delta - std::stod(row[5])));
    }

    const auto cronbach_rows = read_table("cronbach_oracle.csv");
    for (const auto& row : cronbach_rows) {
        const auto n_raters = static_cast<std::size_t>(std::stoul(row[1]));
        const auto n_items = static_cast<std::size_t>(std::stoul(row[2]));
        const auto flat = parse_samples(row[3]);
        std::vector<std::vector<double>> ratings(n_raters, std::vector<double>(n_items));
        for (std::size_t r = 0; r < n_raters; ++r) {
            for (std::size_t i = 0; i < n_items; ++i) ratings[r][i] = flat[r * n_items + i];
        }
        alpha_err = std::max(alpha_err, std::fabs(cronbach_alpha(ratings) - std::stod(row[4])));
    }

    const auto cdf_rows = read_table("cdf_oracle.csv");
    for (const auto& row : cdf_rows) {
        const double x = std::stod(row[1]);
        const double got = row[0] == "norm" ? normal_cdf(x) : students_t_cdf(x, std::stod(row[2]));
        cdf_err = std::max(cdf_err, std::fabs(got - std::stod(row[3])));
    }

    const bool counts_ok = welch_rows.size() >= 50 && mwu_rows.size() >= 50 &&
                           effect_rows.size() >= 50 && cronbach_rows.size() >= 50;
    const bool ok = counts_ok && all_exact && welch_err <= 1e-6 && mwu_err <= 1e-6 &&
                    effect_err <= 1e-6 && alpha_err <= 1e-6 && cdf_err <= 1e-10;
    return {ok, fmt("max |error|: welch %.1e, rank test %.1e, effects %.1e, alpha %.1e, "
                    "cdf %.1e (%zu/%zu/%zu/%zu cases)",
                    welch_err, mwu_err, effect_err, alpha_err, cdf_err, welch_rows.size(),
                    mwu_rows.size(), effect_rows.size(), cronbach_rows.size())};
}

Outcome check_equation_examples() {
    double err = 0.0;
    auto note = [&](double got, double want) { err = std::max(err, std::fabs(got - want)); };

    // consistency components and their weighted blend
    const std::vector<std::string> pair = {"a b c", "b c d"};
    note(jaccard_consistency(pair), 0.5);
    const std::vector<std::string> triple = {"a b", "a c", "a d"};
    note(semantic_consistency(triple), 0.2586152916157727);
    const std::vector<std::string> shapes = {"a1 a2 a3 a4 a5 a6 a7 a8 a9 a10.",
                                             "b1 b2 b3 b4 b5."};
    note(structural_consistency(shapes), 0.75);
    note(composite_consistency(0.5, 0.5, 0.5), 0.5);
    note(composite_consistency(1.0, 0.0, 0.0), 0.4);
    note(composite_consistency(0.0, 0.0, 1.0), 0.2);

    // confidence and uncertainty over sequence log-probabilities
    note(confidence_score(std::vector<double>{0.0, 0.0, 0.0}), 1.0);
    note(confidence_score(std::vector<double>(5, -1.0)), std::exp(-1.0));
    note(confidence_score(std::vector<double>{-1.0, -3.0}), std::exp(-2.0));
    note(uncertainty_score(std::vector<double>{-1.0, -2.0}), std::sqrt(0.5));
    note(uncertainty_score(std::vector<double>{-1.0, -2.0, -3.0}), 1.0);

    // weight learning lands on the dominant vertex, ties to the first
    auto agg_of = [](double c, double conf, double hcr, double u) {
        AggregateMetrics a;
        a.mean_consistency = c;
        a.mean_confidence = conf;
        a.hcr = hcr;
        a.mean_uncertainty = u;
        return a;
    };
    const WeightVector w1 = learn_weights(agg_of(0.1, 0.9, 0.5, 0.0), 0.5);
    note(w1.w_cons, 0.0);
    note(w1.w_conf, 1.0);
    note(w1.w_hcr, 0.0);
    const WeightVector w2 = learn_weights(agg_of(0.4, 0.4, 0.4, 0.0), 0.5);
    note(w2.w_cons, 1.0);
    note(w2.w_conf, 0.0);
    note(w2.w_hcr, 0.0);
    const WeightVector w3 = learn_weights(agg_of(0.185, 0.420, 0.735, 0.0), 0.5);
    note(w3.w_cons, 0.0);
    note(w3.w_conf, 0.0);
    note(w3.w_hcr, 1.0);

    // equal means make the composite score weight-independent
    const AggregateMetrics flat = agg_of(0.5, 0.5, 0.5, 0.2);
    note(composite_score(flat, learn_weights(flat, 1.0), 1.0).value, 0.3);

    // category entropy and the efficiency gain on top of it
    CategoryCounts uniform;
    for (Category c : kAllCategories) uniform[c] = 5;
    note(category_entropy(uniform), 2.321928094887362);
    CategoryCounts skewed;
    skewed[Category::FactualKnowledge] = 4;
    skewed[Category::LogicalReasoning] = 3;
    skewed[Category::EthicalScenarios] = 1;
    skewed[Category::AmbiguousScenarios] = 1;
    skewed[Category::EdgeCases] = 1;
    note(category_entropy(skewed), 2.0464393446710156);
    note(information_efficiency_gain(1.5, 1.5), 0.0);
    note(information_efficiency_gain(2.0, 1.0), 1.0);

    return {err <= 1e-12, fmt("max |error| %.2e across the worked examples", err)};
}

Outcome check_weight_optimality() {
    Rng rng(4242);
    auto random_simplex = [&rng]() {
        double e[3];
        double s = 0.0;
        for (double& x : e) {
            x = -std::log(1.0 - rng.uniform());
            s += x;
        }
        return WeightVector{e[0] / s, e[1] / s, e[2] / s};
    };

    std::size_t violations = 0;
    double max_pgd_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        AggregateMetrics agg;
        agg.mean_consistency = rng.uniform();
        agg.mean_confidence = rng.uniform();
        agg.hcr = rng.uniform();
        agg.mean_uncertainty = rng.uniform();

        const WeightVector best = learn_weights(agg, 0.5, WeightSolver::ExactVertex);
        const double best_score = composite_score(agg, best, 0.5).value;
        for (int i = 0; i < 1000; ++i) {
            if (composite_score(agg, random_simplex(), 0.5).value > best_score + 1e-12) {
                ++violations;
            }
        }
        const WeightVector pgd = learn_weights(agg, 0.5, WeightSolver::ProjectedGradient);
        max_pgd_diff = std::max(
            max_pgd_diff, std::fabs(composite_score(agg, pgd, 0.5).value - best_score));
    }
    const bool ok = violations == 0 && max_pgd_diff <= 1e-6;
    return {ok, fmt("%zu dominance violations over 100x1000 candidates; "
                    "max |gradient - exact| %.1e",
                    violations, max_pgd_diff)};
}

int run_command(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome check_cli_reproducibility() {
    const std::string cli = MICROPROBE_CLI_PATH;
    const std::string pool = std::string(MICROPROBE_SOURCE_DIR) + "/data/pools/example_100.jsonl";
    const fs::path base =
        fs::temp_directory_path() / ("microprobe_accept_" + std::to_string(::getpid()));
    fs::create_directories(base);

    const std::string assess = "\"" + cli + "\" assess --pool \"" + pool +
                               "\" --method strategic --n 25 --k 3 --seed 11 --backend mock "
                               "--out \"";
    const int r1 = run_command(assess + (base / "a").string() + "\" >/dev/null 2>&1");
    const int r2 = run_command(assess + (base / "b").string() + "\" >/dev/null 2>&1");
    const int r3 = run_command("\"" + cli + "\" reproduce-check \"" +
                               (base / "a" / "report.json").string() + "\" \"" +
                               (base / "b" / "report.json").string() + "\" >/dev/null 2>&1");
    std::error_code ec;
    fs::remove_all(base, ec);
    const bool ok = r1 == 0 && r2 == 0 && r3 == 0;
    return {ok, fmt("assess exits %d and %d, reproduce-check exit %d", r1, r2, r3)};
}

Outcome check_bootstrap_determinism() {
    Rng rng(1234);
    std::vector<double> samples(30);
    for (double& x : samples) x = rng.normal(0.4, 1.3);

    const BootstrapCI a = bootstrap_ci(samples, 1000, 0.95, 99);
    const BootstrapCI b = bootstrap_ci(samples, 1000, 0.95, 99);
    const bool identical = a.lower == b.lower && a.upper == b.upper;

    const std::vector<double> constant(12, 2.5);
    const BootstrapCI c = bootstrap_ci(constant, 1000, 0.95, 7);
    const bool degenerate = c.lower == 2.5 && c.upper == 2.5;

    return {identical && degenerate,
            fmt("seeded CI [%.6f, %.6f] reproduced bit-for-bit: %s; constant-sample CI "
                "degenerate: %s",
                a.lower, a.upper, identical ? "yes" : "no", degenerate ? "yes" : "no")};
}

}  // namespace

int main() {
    int failures = 0;
    int index = 0;
    auto run = [&](const char* name, double budget_seconds,
                   const std::function<Outcome()>& fn) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && dt < budget_seconds;
        if (!pass) ++failures;
        std::printf("[%s] %2d %s: %s [%.2fs, budget %.0fs]\n", pass ? "PASS" : "FAIL", index,
                    name, o.detail.c_str(), dt, budget_seconds);
    };

    run("balanced selection reaches maximal category entropy", 1.0, check_entropy);
    run("information-efficiency gain over a skewed baseline", 1.0, check_efficiency_gain);
    run("statistical power at the observed effect size", 1.0, check_power);
    run("relative-improvement arithmetic", 1.0, check_improvement_formula);
    run("concentrated failures separate strategic from random selection", 60.0,
        check_failure_detection);
    run("statistics agree with the committed oracle tables", 30.0, check_statistical_oracles);
    run("worked metric examples hold to 1e-12", 1.0, check_equation_examples);
    run("learned weights dominate random simplex points", 10.0, check_weight_optimality);
    run("CLI runs reproduce bit-for-bit under one seed", 30.0, check_cli_reproducibility);
    run("bootstrap intervals are seeded and sane", 5.0, check_bootstrap_determinism);

    return failures == 0 ? 0 : 1;
}
