#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "microprobe/reliability_metrics.hpp"
#include "microprobe/selection.hpp"
#include "microprobe/stats_suite.hpp"
#include "microprobe/weight_learner.hpp"

namespace microprobe {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

// Tool version, platform string, compiler, and an MD5 fingerprint of the
// pinned dependency versions. Excluded from reproduce checks.
json capture_environment();

json selection_to_json(const SelectionResult& sel);
json assessment_to_json(const ProbeAssessment& a);
json assessments_to_json(const std::vector<ProbeAssessment>& list);
json aggregate_to_json(const AggregateMetrics& agg);
json weights_to_json(const WeightVector& w, double lambda, double gamma, WeightSolver solver);
json test_result_to_json(const TestResult& r);
json effect_sizes_to_json(const EffectSizes& e);
json bootstrap_to_json(const BootstrapCI& ci);
json stability_to_json(const StabilityResult& s);

// Temp file in the target directory, then rename; readers never observe a
// partial report.
void write_text_atomic(const std::string& path, const std::string& content);
void write_report(const std::string& path, const json& report);
json load_report(const std::string& path);

// Per-probe metric rows with %.17g numbers, one line per assessment.
std::string assessments_csv(const std::vector<ProbeAssessment>& list);

struct ReproduceVerdict {
    bool pass = false;
    std::string first_difference;  // JSON pointer-ish path of the first mismatch
};

// Field-by-field comparison ignoring the "timings" and "environment"
// blocks. PASS requires exact equality: every numeric difference 0.000 and
// all strings equal.
ReproduceVerdict reproduce_check(const json& a, const json& b);

enum class PlotKind { MethodComparison, Distributions, ConfidenceIntervals, PowerCurve, Ablation };

std::string_view plot_kind_name(PlotKind k);
std::optional<PlotKind> plot_kind_from_name(std::string_view name);

// Headered CSV with deterministic row order; throws RunError when the
// report lacks the series the kind needs.
std::string export_plot_data(const json& report, PlotKind kind);

}  // namespace microprobe
