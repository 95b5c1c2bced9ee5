#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "microprobe/errors.hpp"
#include "microprobe/orchestrator.hpp"

namespace {

using namespace microprobe;

std::vector<SelectorMethod> parse_method_list(const std::string& arg) {
    std::vector<SelectorMethod> out;
    std::size_t start = 0;
    while (start <= arg.size()) {
        std::size_t comma = arg.find(',', start);
        if (comma == std::string::npos) comma = arg.size();
        std::string name = arg.substr(start, comma - start);
        // trim surrounding spaces
        while (!name.empty() && name.front() == ' ') name.erase(name.begin());
        while (!name.empty() && name.back() == ' ') name.pop_back();
        if (!name.empty()) {
            auto m = selector_from_name(name);
            if (!m) throw ConfigError("unknown selection method '" + name + "'");
            out.push_back(*m);
        }
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("--method needs at least one method name");
    return out;
}

// Flags shared by assess and compare; only flags the user actually passed
// override the config file.
struct CommonOpts {
    std::string config;
    std::string pool;
    std::string backend;
    std::string out;
    std::string method;
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    int k = 0;

    CLI::Option* o_config = nullptr;
    CLI::Option* o_pool = nullptr;
    CLI::Option* o_backend = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_method = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_n = nullptr;
    CLI::Option* o_k = nullptr;

    void attach(CLI::App* cmd) {
        o_config = cmd->add_option("--config", config, "JSON run configuration file");
        o_pool = cmd->add_option("--pool", pool, "probe pool file (JSON lines)");
        o_seed = cmd->add_option("--seed", seed, "master seed");
        o_backend = cmd->add_option("--backend", backend, "model backend: mock or http");
        o_n = cmd->add_option("--n", n, "number of probes to select");
        o_k = cmd->add_option("--k", k, "responses per probe");
        o_out = cmd->add_option("--out", out, "output directory");
        o_method = cmd->add_option("--method", method,
                                   "selection method name, or a comma-separated list");
    }

    RunConfig build() const {
        RunConfig cfg = o_config->count() ? load_run_config(config) : RunConfig{};
        if (o_pool->count()) cfg.pool_path = pool;
        if (o_seed->count()) cfg.seed = seed;
        if (o_backend->count()) {
            auto b = backend_kind_from_name(backend);
            if (!b) throw ConfigError("unknown backend '" + backend + "' (expected mock or http)");
            cfg.backend = *b;
        }
        if (o_n->count()) cfg.n = static_cast<std::size_t>(n);
        if (o_k->count()) cfg.gen.k = k;
        if (o_out->count()) cfg.out_dir = out;
        if (o_method->count()) cfg.methods = parse_method_list(method);
        return cfg;
    }
};

void print_aggregate_line(const json& agg) {
    std::printf("  mean consistency %.6f | mean confidence %.6f | mean uncertainty %.6f\n",
                agg.at("mean_consistency").get<double>(), agg.at("mean_confidence").get<double>(),
                agg.at("mean_uncertainty").get<double>());
    std::printf("  HCR %.3f | LUR %.3f | probes %zu\n", agg.at("hcr").get<double>(),
                agg.at("lur").get<double>(), agg.at("n_probes").get<std::size_t>());
}

int run_assess(const CommonOpts& opts) {
    const RunConfig cfg = opts.build();
    const RunOutcome outcome = run_assessment(cfg);
    const json& r = outcome.report;

    std::printf("pool: %s (%zu probes, md5 %s)\n", r.at("pool").at("path").get<std::string>().c_str(),
                r.at("pool").at("size").get<std::size_t>(),
                r.at("pool").at("checksum").get<std::string>().c_str());
    std::printf("selection: %s n=%zu seed=%llu entropy=%.6f bits\n",
                r.at("selection").at("method").get<std::string>().c_str(),
                r.at("selection").at("target_size").get<std::size_t>(),
                static_cast<unsigned long long>(r.at("selection").at("seed").get<std::uint64_t>()),
                r.at("selection").at("entropy_bits").get<double>());
    print_aggregate_line(r.at("aggregate"));
    const json& w = r.at("weights");
    std::printf("composite reliability %.6f (w_cons=%g w_conf=%g w_hcr=%g lambda=%g)\n",
                r.at("composite_score").get<double>(), w.at("w_cons").get<double>(),
                w.at("w_conf").get<double>(), w.at("w_hcr").get<double>(),
                w.at("lambda").get<double>());
    std::printf("report: %s\n", outcome.report_path.c_str());

    if (outcome.generation_failures > 0) {
        std::fprintf(stderr, "warning: %zu probes failed to generate; report covers the rest\n",
                     outcome.generation_failures);
        return 2;
    }
    return 0;
}

int run_compare(const CommonOpts& opts) {
    const RunConfig cfg = opts.build();
    const RunOutcome outcome = compare_methods(cfg);
    const json& r = outcome.report;

    std::printf("pool: %s (%zu probes)\n", r.at("pool").at("path").get<std::string>().c_str(),
                r.at("pool").at("size").get<std::size_t>());
    for (const auto& m : r.at("methods")) {
        std::printf("method %s:\n", m.at("method").get<std::string>().c_str());
        print_aggregate_line(m.at("aggregate"));
    }
    for (const auto& c : r.at("statistics").at("comparisons")) {
        const json& cons = c.at("consistency");
        std::string line = c.at("primary").get<std::string>() + " vs " +
                           c.at("baseline").get<std::string>() + ": consistency ";
        if (cons.at("improvement_percent").is_number()) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%+.1f%%", cons.at("improvement_percent").get<double>());
            line += buf;
        } else {
            line += "n/a";
        }
        if (cons.contains("welch_t") && cons.at("welch_t").contains("p_value")) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " (welch p=%.4g", cons.at("welch_t").at("p_value").get<double>());
            line += buf;
            if (cons.contains("effect_sizes") && cons.at("effect_sizes").contains("cohens_d")) {
                std::snprintf(buf, sizeof(buf), ", d=%.3f", cons.at("effect_sizes").at("cohens_d").get<double>());
                line += buf;
            }
            line += ")";
        }
        std::printf("%s\n", line.c_str());
    }
    for (const auto& e : r.at("method_errors")) {
        std::fprintf(stderr, "method %s failed: %s\n", e.at("method").get<std::string>().c_str(),
                     e.at("error").get<std::string>().c_str());
    }
    std::printf("report: %s\n", outcome.report_path.c_str());

    if (outcome.generation_failures > 0) {
        std::fprintf(stderr, "warning: %zu failures during generation; see the report\n",
                     outcome.generation_failures);
        return 2;
    }
    return 0;
}

int run_reproduce_check(const std::string& path_a, const std::string& path_b) {
    const json a = load_report(path_a);
    const json b = load_report(path_b);
    const ReproduceVerdict v = reproduce_check(a, b);
    if (v.pass) {
        std::printf("PASS: reports match exactly (timings and environment excluded)\n");
        return 0;
    }
    std::printf("FAIL: first difference at %s\n", v.first_difference.c_str());
    return 3;
}

int run_export_plots(const std::string& report_path, const std::string& kind_name,
                     const std::string& out_dir) {
    auto kind = plot_kind_from_name(kind_name);
    if (!kind) {
        throw ConfigError("unknown plot kind '" + kind_name +
                          "' (expected method-comparison, distributions, ci, power-curve or ablation)");
    }
    const json report = load_report(report_path);
    const std::string csv = export_plot_data(report, *kind);
    const std::string path =
        (std::filesystem::path(out_dir) / (kind_name + ".csv")).string();
    write_text_atomic(path, csv);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int run_validate_pool(const std::string& pool_path, bool lenient) {
    std::vector<std::string> warnings;
    const ProbePool pool =
        load_pool(pool_path, lenient ? PoolParseMode::Lenient : PoolParseMode::Strict, &warnings);
    std::printf("pool: %s\n", pool_path.c_str());
    std::printf("probes: %zu\n", pool.size());
    std::printf("checksum: md5 %s\n", pool.checksum.c_str());
    const CategoryCounts counts = pool.category_counts();
    for (Category c : kAllCategories) {
        std::printf("  %-20s %zu\n", std::string(category_label(c)).c_str(), counts[c]);
    }
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("OK\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MicroProbe: reliability assessment for text-generation models"};
    app.require_subcommand(1);

    CommonOpts assess_opts;
    CLI::App* assess_cmd = app.add_subcommand("assess", "run one selection method end to end");
    assess_opts.attach(assess_cmd);

    CommonOpts compare_opts;
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run several methods and compare them statistically");
    compare_opts.attach(compare_cmd);

    std::string rc_a, rc_b;
    CLI::App* reproduce_cmd =
        app.add_subcommand("reproduce-check", "compare two reports field by field");
    reproduce_cmd->add_option("report_a", rc_a, "first report")->required();
    reproduce_cmd->add_option("report_b", rc_b, "second report")->required();

    std::string plot_report, plot_kind, plot_out = ".";
    CLI::App* plots_cmd = app.add_subcommand("export-plots", "export plot-ready CSV series");
    plots_cmd->add_option("--report", plot_report, "report to read")->required();
    plots_cmd->add_option("--kind", plot_kind,
                          "method-comparison | distributions | ci | power-curve | ablation")
        ->required();
    plots_cmd->add_option("--out", plot_out, "output directory");

    std::string vp_pool;
    bool vp_lenient = false;
    CLI::App* validate_cmd = app.add_subcommand("validate-pool", "parse and summarize a probe pool");
    validate_cmd->add_option("--pool", vp_pool, "probe pool file")->required();
    validate_cmd->add_flag("--lenient", vp_lenient, "warn on unknown keys instead of failing");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(assess_cmd)) return run_assess(assess_opts);
        if (app.got_subcommand(compare_cmd)) return run_compare(compare_opts);
        if (app.got_subcommand(reproduce_cmd)) return run_reproduce_check(rc_a, rc_b);
        if (app.got_subcommand(plots_cmd)) return run_export_plots(plot_report, plot_kind, plot_out);
        if (app.got_subcommand(validate_cmd)) return run_validate_pool(vp_pool, vp_lenient);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const microprobe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const microprobe::RunError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
