#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "microprobe/model_gateway.hpp"
#include "microprobe/report.hpp"
#include "microprobe/selection.hpp"
#include "microprobe/weight_learner.hpp"

namespace microprobe {

enum class BackendKind { Mock, Http };

std::string_view backend_kind_name(BackendKind k);
std::optional<BackendKind> backend_kind_from_name(std::string_view name);

ReliabilityProfile default_mock_profile();

struct RunConfig {
    std::string pool_path;
    std::vector<SelectorMethod> methods{SelectorMethod::Strategic};
    std::size_t n = 100;
    GenerationParams gen;
    std::uint64_t seed = 0;
    BackendKind backend = BackendKind::Mock;
    std::string out_dir;
    double tau_conf = kDefaultTauConf;
    double tau_unc = kDefaultTauUnc;
    double lambda = kDefaultLambda;
    double gamma = 0.0;
    WeightSolver solver = WeightSolver::ExactVertex;
    LogprobAggregation agg = LogprobAggregation::Mean;
    PoolParseMode parse_mode = PoolParseMode::Strict;
    int parallelism = 4;
    HttpBackendConfig http;
    ReliabilityProfile mock_profile = default_mock_profile();

    void validate() const;
};

// Strict parse: unknown keys anywhere in the document are a ConfigError.
RunConfig parse_run_config(const json& j);
RunConfig load_run_config(const std::string& path);

// The config as embedded in reports: everything needed to re-run, minus the
// output directory (where a report lands must not change what it contains)
// and any credentials.
json config_snapshot(const RunConfig& cfg);

std::unique_ptr<ModelBackend> make_backend(const RunConfig& cfg);

// Dispatch to the configured selector. The uncertainty method requires
// pilot scores for every pool probe.
SelectionResult run_selection(const ProbePool& pool, SelectorMethod method, std::size_t n,
                              std::uint64_t seed,
                              const std::map<std::string, double>* pilot_uncertainty = nullptr);

// k responses for every pool probe on a dedicated generation stream,
// scored for uncertainty. Feeds the uncertainty selector.
std::map<std::string, double> pilot_uncertainty_scores(const ProbePool& pool,
                                                       const RunConfig& cfg,
                                                       ModelBackend& backend);

// Held for the duration of a run; a second run against the same output
// directory fails fast instead of interleaving writes.
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::string& dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

  private:
    std::string path_;
};

struct RunOutcome {
    json report;
    std::string report_path;
    std::size_t generation_failures = 0;  // probes (or whole methods) that failed
};

// Full single-method pipeline; writes report.json and assessments.csv to
// the output directory.
RunOutcome run_assessment(const RunConfig& cfg);

// Runs every configured method, then pairwise statistics of the first
// (primary) method against each baseline on per-probe composite
// consistency and confidence. Writes comparison.json and one per-method
// assessment CSV.
RunOutcome compare_methods(const RunConfig& cfg);

}  // namespace microprobe
