#include "microprobe/report.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <openssl/opensslv.h>
#include <sstream>

#include "microprobe/errors.hpp"
#include "microprobe/probe_catalog.hpp"

namespace microprobe {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const json& member(const json& j, const char* key, const char* context) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw RunError(std::string(context) + ": report has no '" + key + "' section");
    }
    return *it;
}

// Depth-first comparison; returns the path of the first mismatch.
bool first_diff(const json& a, const json& b, const std::string& path, std::string& where) {
    if (a.type() != b.type()) {
        // Allow 1 vs 1.0 style numeric type mixes; nlohmann compares values.
        if (a.is_number() && b.is_number() && a == b) return false;
        where = path + " (type " + std::string(a.type_name()) + " vs " + b.type_name() + ")";
        return true;
    }
    if (a.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                where = path + "/" + it.key() + " (missing in second report)";
                return true;
            }
            if (first_diff(it.value(), b.at(it.key()), path + "/" + it.key(), where)) return true;
        }
        for (auto it = b.begin(); it != b.end(); ++it) {
            if (!a.contains(it.key())) {
                where = path + "/" + it.key() + " (missing in first report)";
                return true;
            }
        }
        return false;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where = path + " (array length " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")";
            return true;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (first_diff(a[i], b[i], path + "/" + std::to_string(i), where)) return true;
        }
        return false;
    }
    if (a != b) {
        where = path + " (" + a.dump() + " vs " + b.dump() + ")";
        return true;
    }
    return false;
}

}  // namespace

json capture_environment() {
    json env;
    env["tool_version"] = std::string(kToolVersion);

    utsname u{};
    if (uname(&u) == 0) {
        env["platform"] = std::string(u.sysname) + " " + u.release + " " + u.machine;
    } else {
        env["platform"] = "unknown";
    }
#if defined(__VERSION__)
    env["compiler"] = __VERSION__;
#else
    env["compiler"] = "unknown";
#endif
    const std::string deps = std::string("nlohmann_json=") +
                             std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_PATCH) + ";openssl=" +
                             OPENSSL_VERSION_TEXT + ";cxx_standard=" + std::to_string(__cplusplus);
    env["dependencies"] = deps;
    env["dependency_fingerprint"] = pool_checksum(deps);
    return env;
}

json selection_to_json(const SelectionResult& sel) {
    json j;
    j["method"] = std::string(selector_name(sel.method));
    j["seed"] = sel.seed;
    j["target_size"] = sel.target_size;
    j["entropy_bits"] = sel.entropy_bits;
    json counts;
    for (Category c : kAllCategories) {
        counts[std::string(category_label(c))] = sel.counts[c];
    }
    j["category_counts"] = std::move(counts);
    json ids = json::array();
    for (const auto& p : sel.probes) ids.push_back(p.id);
    j["probe_ids"] = std::move(ids);
    return j;
}

json assessment_to_json(const ProbeAssessment& a) {
    json j;
    j["id"] = a.probe_id;
    j["jaccard"] = a.jaccard;
    j["semantic"] = a.semantic;
    j["structural"] = a.structural;
    j["composite"] = a.composite_consistency;
    j["confidence"] = a.confidence;
    j["uncertainty"] = a.uncertainty;
    j["mean_logprob"] = a.mean_logprob;
    return j;
}

json assessments_to_json(const std::vector<ProbeAssessment>& list) {
    json arr = json::array();
    for (const auto& a : list) arr.push_back(assessment_to_json(a));
    return arr;
}

json aggregate_to_json(const AggregateMetrics& agg) {
    json j;
    j["mean_consistency"] = agg.mean_consistency;
    j["mean_confidence"] = agg.mean_confidence;
    j["mean_uncertainty"] = agg.mean_uncertainty;
    j["hcr"] = agg.hcr;
    j["lur"] = agg.lur;
    j["n_probes"] = agg.n_probes;
    j["tau_conf"] = agg.tau_conf;
    j["tau_unc"] = agg.tau_unc;
    return j;
}

json weights_to_json(const WeightVector& w, double lambda, double gamma, WeightSolver solver) {
    json j;
    j["w_cons"] = w.w_cons;
    j["w_conf"] = w.w_conf;
    j["w_hcr"] = w.w_hcr;
    j["lambda"] = lambda;
    j["gamma"] = gamma;
    j["solver"] = solver == WeightSolver::ExactVertex ? "exact" : "pgd";
    return j;
}

json test_result_to_json(const TestResult& r) {
    json j;
    j["test"] = r.test_name;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    if (r.df > 0.0) j["df"] = r.df;
    j["n1"] = r.n1;
    j["n2"] = r.n2;
    j["two_sided"] = r.two_sided;
    if (r.test_name == "mann_whitney_u") j["exact"] = r.exact;
    return j;
}

json effect_sizes_to_json(const EffectSizes& e) {
    json j;
    j["cohens_d"] = e.cohens_d;
    j["hedges_g"] = e.hedges_g;
    j["glass_delta"] = e.glass_delta;
    return j;
}

json bootstrap_to_json(const BootstrapCI& ci) {
    json j;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["level"] = ci.level;
    j["iterations"] = ci.iterations;
    j["seed"] = ci.seed;
    return j;
}

json stability_to_json(const StabilityResult& s) {
    json j;
    j["fold_means"] = s.fold_improvements;
    j["mean"] = s.mean;
    j["std"] = s.std_dev;
    j["stability_coefficient"] = s.stability_coefficient;
    j["ci95"] = json::array({s.ci_lower, s.ci_upper});
    return j;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RunError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw RunError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw RunError("cannot move report into place at '" + path + "'");
    }
}

void write_report(const std::string& path, const json& report) {
    write_text_atomic(path, report.dump(2) + "\n");
}

json load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot open report '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw RunError("cannot parse report '" + path + "': " + e.what());
    }
}

std::string assessments_csv(const std::vector<ProbeAssessment>& list) {
    std::string out = "id,jaccard,semantic,structural,composite,confidence,uncertainty\n";
    for (const auto& a : list) {
        out += csv_escape(a.probe_id);
        out += ',';
        out += fmt17(a.jaccard);
        out += ',';
        out += fmt17(a.semantic);
        out += ',';
        out += fmt17(a.structural);
        out += ',';
        out += fmt17(a.composite_consistency);
        out += ',';
        out += fmt17(a.confidence);
        out += ',';
        out += fmt17(a.uncertainty);
        out += '\n';
    }
    return out;
}

ReproduceVerdict reproduce_check(const json& a, const json& b) {
    if (!a.is_object() || !b.is_object() || !a.contains("kind") || !b.contains("kind")) {
        throw RunError("reproduce check: inputs are not recognizable reports");
    }
    if (a.at("kind") != b.at("kind")) {
        throw RunError("reproduce check: schema mismatch, report kinds differ (" +
                       a.at("kind").dump() + " vs " + b.at("kind").dump() + ")");
    }
    json ca = a;
    json cb = b;
    for (auto* c : {&ca, &cb}) {
        c->erase("timings");
        c->erase("environment");
    }
    ReproduceVerdict v;
    std::string where;
    v.pass = !first_diff(ca, cb, "", where);
    v.first_difference = where;
    return v;
}

std::string_view plot_kind_name(PlotKind k) {
    switch (k) {
        case PlotKind::MethodComparison: return "method-comparison";
        case PlotKind::Distributions: return "distributions";
        case PlotKind::ConfidenceIntervals: return "ci";
        case PlotKind::PowerCurve: return "power-curve";
        case PlotKind::Ablation: return "ablation";
    }
    return "unknown";
}

std::optional<PlotKind> plot_kind_from_name(std::string_view name) {
    for (PlotKind k : {PlotKind::MethodComparison, PlotKind::Distributions,
                       PlotKind::ConfidenceIntervals, PlotKind::PowerCurve, PlotKind::Ablation}) {
        if (name == plot_kind_name(k)) return k;
    }
    return std::nullopt;
}

namespace {

struct MethodSection {
    std::string name;
    const json* body;
};

// Normalizes the two report kinds into a list of per-method sections.
std::vector<MethodSection> method_sections(const json& report) {
    std::vector<MethodSection> out;
    const std::string kind = report.value("kind", "");
    if (kind == "assessment") {
        const json& sel = member(report, "selection", "plot export");
        out.push_back({sel.value("method", "unknown"), &report});
    } else if (kind == "comparison") {
        const json& methods = member(report, "methods", "plot export");
        for (const auto& m : methods) {
            out.push_back({m.value("method", "unknown"), &m});
        }
    } else {
        throw RunError("plot export: unrecognized report kind '" + kind + "'");
    }
    if (out.empty()) throw RunError("plot export: report contains no method sections");
    return out;
}

std::string export_method_comparison(const json& report) {
    if (report.value("kind", "") != "comparison") {
        throw RunError("plot export: method-comparison needs a comparison report");
    }
    std::string csv = "method,mean_consistency,mean_confidence,mean_uncertainty,hcr,lur,composite_score\n";
    for (const auto& [name, body] : method_sections(report)) {
        const json& agg = member(*body, "aggregate", "plot export");
        csv += csv_escape(name) + ',' + fmt17(agg.at("mean_consistency").get<double>()) + ',' +
               fmt17(agg.at("mean_confidence").get<double>()) + ',' +
               fmt17(agg.at("mean_uncertainty").get<double>()) + ',' +
               fmt17(agg.at("hcr").get<double>()) + ',' + fmt17(agg.at("lur").get<double>()) + ',' +
               fmt17(member(*body, "composite_score", "plot export").get<double>()) + '\n';
    }
    return csv;
}

std::string export_distributions(const json& report) {
    std::string csv = "method,id,composite,confidence,uncertainty\n";
    bool any = false;
    for (const auto& [name, body] : method_sections(report)) {
        const json& assessments = member(*body, "assessments", "plot export");
        for (const auto& a : assessments) {
            any = true;
            csv += csv_escape(name) + ',' + csv_escape(a.at("id").get<std::string>()) + ',' +
                   fmt17(a.at("composite").get<double>()) + ',' +
                   fmt17(a.at("confidence").get<double>()) + ',' +
                   fmt17(a.at("uncertainty").get<double>()) + '\n';
        }
    }
    if (!any) throw RunError("plot export: report has no per-probe assessments");
    return csv;
}

std::string export_ci(const json& report) {
    std::string csv = "series,metric,lower,upper,level\n";
    const std::string kind = report.value("kind", "");
    const json& stats = member(report, "statistics", "plot export");
    auto emit = [&](const std::string& series, const std::string& metric, const json& ci) {
        csv += csv_escape(series) + ',' + csv_escape(metric) + ',' +
               fmt17(ci.at("lower").get<double>()) + ',' + fmt17(ci.at("upper").get<double>()) +
               ',' + fmt17(ci.at("level").get<double>()) + '\n';
    };
    if (kind == "assessment") {
        emit("run", "mean_consistency", member(stats, "bootstrap_mean_consistency", "plot export"));
        emit("run", "mean_confidence", member(stats, "bootstrap_mean_confidence", "plot export"));
        return csv;
    }
    if (kind == "comparison") {
        const json& comparisons = member(stats, "comparisons", "plot export");
        if (comparisons.empty()) throw RunError("plot export: no comparisons in report");
        for (const auto& c : comparisons) {
            const std::string series =
                c.at("primary").get<std::string>() + "_vs_" + c.at("baseline").get<std::string>();
            for (const char* metric : {"consistency", "confidence"}) {
                emit(series, metric,
                     member(member(c, metric, "plot export"), "bootstrap_mean_diff", "plot export"));
            }
        }
        return csv;
    }
    throw RunError("plot export: unrecognized report kind '" + kind + "'");
}

std::string export_power_curve() {
    std::string csv = "d,n,power\n";
    for (double d : {0.2, 0.5, 0.8, 1.207}) {
        for (std::size_t n = 5; n <= 100; ++n) {
            csv += fmt17(d) + ',' + std::to_string(n) + ',' + fmt17(power_two_sample(d, n, 0.05)) + '\n';
        }
    }
    return csv;
}

std::string export_ablation(const json& report) {
    std::string csv = "method,variant,value\n";
    const double lambda = member(report, "config", "plot export").value("lambda", 0.0);
    for (const auto& [name, body] : method_sections(report)) {
        const json& assessments = member(*body, "assessments", "plot export");
        if (assessments.empty()) throw RunError("plot export: report has no per-probe assessments");
        double jac = 0.0, sem = 0.0, str = 0.0, comp = 0.0;
        for (const auto& a : assessments) {
            jac += a.at("jaccard").get<double>();
            sem += a.at("semantic").get<double>();
            str += a.at("structural").get<double>();
            comp += a.at("composite").get<double>();
        }
        const auto n = static_cast<double>(assessments.size());
        const json& agg = member(*body, "aggregate", "plot export");
        const double uniform_score = (agg.at("mean_consistency").get<double>() +
                                      agg.at("mean_confidence").get<double>() +
                                      agg.at("hcr").get<double>()) / 3.0 -
                                     lambda * agg.at("mean_uncertainty").get<double>();
        auto row = [&](const char* variant, double value) {
            csv += csv_escape(name) + ',' + variant + ',' + fmt17(value) + '\n';
        };
        row("consistency_jaccard_only", jac / n);
        row("consistency_semantic_only", sem / n);
        row("consistency_structural_only", str / n);
        row("consistency_composite", comp / n);
        row("weights_fixed_uniform", uniform_score);
        row("weights_learned", member(*body, "composite_score", "plot export").get<double>());
    }
    return csv;
}

}  // namespace

std::string export_plot_data(const json& report, PlotKind kind) {
    switch (kind) {
        case PlotKind::MethodComparison: return export_method_comparison(report);
        case PlotKind::Distributions: return export_distributions(report);
        case PlotKind::ConfidenceIntervals: return export_ci(report);
        case PlotKind::PowerCurve: return export_power_curve();
        case PlotKind::Ablation: return export_ablation(report);
    }
    throw RunError("plot export: unknown kind");
}

}  // namespace microprobe
