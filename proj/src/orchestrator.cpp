#include "microprobe/orchestrator.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "microprobe/errors.hpp"
#include "microprobe/reliability_metrics.hpp"
#include "microprobe/rng.hpp"
#include "microprobe/stats_suite.hpp"

namespace microprobe {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct PhaseTimings {
    double selection = 0.0;
    double generation = 0.0;
    double scoring = 0.0;
    double statistics = 0.0;
};

json timings_to_json(const PhaseTimings& t, double total) {
    json j;
    j["selection_seconds"] = t.selection;
    j["generation_seconds"] = t.generation;
    j["scoring_seconds"] = t.scoring;
    j["statistics_seconds"] = t.statistics;
    j["total_seconds"] = total;
    return j;
}

// --- config parsing helpers ---------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (std::string_view k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown config key '" + context + it.key() + "'");
    }
}

double as_number(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError("config key '" + name + "' must be a number");
    return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& name) {
    if (!v.is_number_integer()) throw ConfigError("config key '" + name + "' must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_unsigned(const json& v, const std::string& name) {
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
        throw ConfigError("config key '" + name + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& name) {
    if (!v.is_string()) throw ConfigError("config key '" + name + "' must be a string");
    return v.get<std::string>();
}

CategoryProfile parse_category_profile(const json& j, CategoryProfile base,
                                       const std::string& context) {
    if (!j.is_object()) throw ConfigError("config key '" + context + "' must be an object");
    reject_unknown(j, {"base_quality", "response_noise", "logprob_mean", "logprob_spread"},
                   context + ".");
    if (j.contains("base_quality")) base.base_quality = as_number(j["base_quality"], context + ".base_quality");
    if (j.contains("response_noise")) base.response_noise = as_number(j["response_noise"], context + ".response_noise");
    if (j.contains("logprob_mean")) base.logprob_mean = as_number(j["logprob_mean"], context + ".logprob_mean");
    if (j.contains("logprob_spread")) base.logprob_spread = as_number(j["logprob_spread"], context + ".logprob_spread");
    return base;
}

Category category_from_label_or_throw(const std::string& label, const std::string& context) {
    auto c = category_from_label(label);
    if (!c) throw ConfigError("unknown category '" + label + "' in '" + context + "'");
    return *c;
}

ReliabilityProfile parse_mock_profile(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'mock_profile' must be an object");
    reject_unknown(j, {"default", "categories", "failure_rates"}, "mock_profile.");

    CategoryProfile base{};
    if (j.contains("default")) {
        base = parse_category_profile(j["default"], base, "mock_profile.default");
    }
    ReliabilityProfile profile = ReliabilityProfile::uniform(base);

    if (j.contains("categories")) {
        const json& cats = j["categories"];
        if (!cats.is_object()) throw ConfigError("'mock_profile.categories' must be an object");
        for (auto it = cats.begin(); it != cats.end(); ++it) {
            const Category c = category_from_label_or_throw(it.key(), "mock_profile.categories");
            profile.categories[category_index(c)] = parse_category_profile(
                it.value(), profile.categories[category_index(c)],
                "mock_profile.categories." + it.key());
        }
    }
    if (j.contains("failure_rates")) {
        const json& rates = j["failure_rates"];
        if (!rates.is_object()) throw ConfigError("'mock_profile.failure_rates' must be an object");
        for (auto it = rates.begin(); it != rates.end(); ++it) {
            const Category c = category_from_label_or_throw(it.key(), "mock_profile.failure_rates");
            profile.failure_rates[c] =
                as_number(it.value(), "mock_profile.failure_rates." + it.key());
        }
    }
    return profile;
}

json profile_to_json(const ReliabilityProfile& p) {
    json cats;
    for (Category c : kAllCategories) {
        const CategoryProfile& cp = p.categories[category_index(c)];
        json e;
        e["base_quality"] = cp.base_quality;
        e["response_noise"] = cp.response_noise;
        e["logprob_mean"] = cp.logprob_mean;
        e["logprob_spread"] = cp.logprob_spread;
        cats[std::string(category_label(c))] = std::move(e);
    }
    json rates;
    for (const auto& [c, rate] : p.failure_rates) {
        rates[std::string(category_label(c))] = rate;
    }
    json j;
    j["categories"] = std::move(cats);
    j["failure_rates"] = std::move(rates);
    return j;
}

// --- pipeline ------------------------------------------------------------------

struct MethodRun {
    SelectionResult selection;
    std::vector<ProbeAssessment> assessments;
    AggregateMetrics aggregates;
    WeightVector weights;
    CompositeScore score;
    std::string backend_label;
    std::vector<std::pair<std::string, std::string>> failures;  // probe id, error
};

MethodRun execute_method(const ProbePool& pool, SelectorMethod method, const RunConfig& cfg,
                         ModelBackend& backend,
                         const std::map<std::string, double>* pilot, PhaseTimings& timings) {
    MethodRun mr;
    auto t0 = Clock::now();
    mr.selection = run_selection(pool, method, cfg.n, cfg.seed, pilot);
    timings.selection += seconds_since(t0);

    GenerationParams params = cfg.gen;
    params.seed = derive_seed(cfg.seed, "generate");
    t0 = Clock::now();
    const auto entries = generate_batch(backend, mr.selection.probes, params, cfg.parallelism);
    timings.generation += seconds_since(t0);
    mr.backend_label = backend.label();

    t0 = Clock::now();
    mr.assessments.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].ok()) {
            mr.assessments.push_back(assess_probe(*entries[i].result, cfg.agg));
        } else {
            mr.failures.emplace_back(mr.selection.probes[i].id, entries[i].error);
        }
    }
    if (mr.assessments.empty()) {
        throw RunError("no probe produced a scored response set for method '" +
                       std::string(selector_name(method)) + "'");
    }
    mr.aggregates = aggregate(mr.assessments, cfg.tau_conf, cfg.tau_unc);
    mr.weights = learn_weights(mr.aggregates, cfg.lambda, cfg.solver, cfg.gamma);
    mr.score = composite_score(mr.aggregates, mr.weights, cfg.lambda);
    timings.scoring += seconds_since(t0);
    return mr;
}

json pool_to_json(const ProbePool& pool, const std::vector<std::string>& warnings) {
    json j;
    j["path"] = pool.source_path;
    j["checksum"] = pool.checksum;
    j["size"] = pool.size();
    json hist;
    const CategoryCounts counts = pool.category_counts();
    for (Category c : kAllCategories) {
        hist[std::string(category_label(c))] = counts[c];
    }
    j["category_histogram"] = std::move(hist);
    j["warnings"] = warnings;
    return j;
}

json generation_to_json(const MethodRun& mr) {
    json j;
    j["backend"] = mr.backend_label;
    json failures = json::array();
    for (const auto& [id, error] : mr.failures) {
        failures.push_back(json{{"id", id}, {"error", error}});
    }
    j["failures"] = std::move(failures);
    return j;
}

json method_section(const MethodRun& mr, std::size_t index, const RunConfig& cfg) {
    json m;
    m["method"] = std::string(selector_name(mr.selection.method));
    m["index"] = index;
    m["selection"] = selection_to_json(mr.selection);
    m["assessments"] = assessments_to_json(mr.assessments);
    m["aggregate"] = aggregate_to_json(mr.aggregates);
    m["weights"] = weights_to_json(mr.weights, cfg.lambda, cfg.gamma, cfg.solver);
    m["composite_score"] = mr.score.value;
    m["generation"] = generation_to_json(mr);
    return m;
}

std::vector<double> metric_vector(const std::vector<ProbeAssessment>& list, bool confidence) {
    std::vector<double> v;
    v.reserve(list.size());
    for (const auto& a : list) v.push_back(confidence ? a.confidence : a.composite_consistency);
    return v;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Statistics of primary vs baseline on one per-probe metric. Degenerate
// inputs surface as per-entry error notes rather than aborting the run.
json metric_stats(const std::vector<double>& ours, const std::vector<double>& base,
                  std::uint64_t master_seed, const std::string& metric_label,
                  std::uint64_t comparison_index) {
    json s;
    auto guarded = [&](const char* key, auto&& fn) {
        try {
            s[key] = fn();
        } catch (const std::exception& e) {
            s[key] = json{{"error", e.what()}};
        }
    };

    s["mean_primary"] = mean_of(ours);
    s["mean_baseline"] = mean_of(base);
    const double mb = mean_of(base);
    if (mb != 0.0) {
        s["improvement_percent"] = (mean_of(ours) - mb) / mb * 100.0;
    } else {
        s["improvement_percent"] = nullptr;
    }

    guarded("welch_t", [&] { return test_result_to_json(welch_t_test(ours, base)); });
    guarded("mann_whitney_u", [&] { return test_result_to_json(mann_whitney_u(ours, base)); });
    guarded("effect_sizes", [&] { return effect_sizes_to_json(effect_sizes(ours, base)); });
    guarded("power_at_observed_d", [&] {
        const double d = cohens_d(ours, base);
        return power_two_sample(d, std::min(ours.size(), base.size()), 0.05);
    });

    if (ours.size() == base.size()) {
        std::vector<double> diffs(ours.size());
        for (std::size_t i = 0; i < ours.size(); ++i) diffs[i] = ours[i] - base[i];
        guarded("bootstrap_mean_diff", [&] {
            return bootstrap_to_json(bootstrap_ci(
                diffs, 1000, 0.95,
                derive_seed(master_seed, "bootstrap/diff/" + metric_label, comparison_index)));
        });
        guarded("kfold_stability", [&] {
            const std::size_t k = std::min<std::size_t>(10, diffs.size());
            json st = stability_to_json(kfold_stability(
                diffs, k, derive_seed(master_seed, "kfold/" + metric_label, comparison_index)));
            st["k"] = k;
            return st;
        });
    } else {
        s["bootstrap_mean_diff"] = json{{"error", "per-probe pairing needs equal sample sizes"}};
        s["kfold_stability"] = json{{"error", "per-probe pairing needs equal sample sizes"}};
    }
    return s;
}

}  // namespace

// --- public API ------------------------------------------------------------------

std::string_view backend_kind_name(BackendKind k) {
    return k == BackendKind::Mock ? "mock" : "http";
}

std::optional<BackendKind> backend_kind_from_name(std::string_view name) {
    if (name == "mock") return BackendKind::Mock;
    if (name == "http") return BackendKind::Http;
    return std::nullopt;
}

ReliabilityProfile default_mock_profile() { return ReliabilityProfile::uniform(CategoryProfile{}); }

void RunConfig::validate() const {
    if (pool_path.empty()) throw ConfigError("a probe pool path is required");
    if (methods.empty()) throw ConfigError("at least one selection method is required");
    if (n == 0) throw ConfigError("selection size n must be >= 1");
    gen.validate();
    if (!(tau_conf >= 0.0 && tau_conf <= 1.0)) throw ConfigError("tau_conf must be in [0,1]");
    if (tau_unc < 0.0) throw ConfigError("tau_unc must be >= 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (backend == BackendKind::Http) {
        if (http.base_url.empty()) throw ConfigError("http backend needs http.base_url");
        if (http.model.empty()) throw ConfigError("http backend needs http.model");
        if (http.timeout_seconds <= 0.0) throw ConfigError("http.timeout_seconds must be > 0");
    }
    mock_profile.validate();
}

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown(j,
                   {"pool", "method", "methods", "n", "k", "temperature", "max_tokens", "seed",
                    "backend", "out", "tau_conf", "tau_unc", "lambda", "gamma", "weight_solver",
                    "logprob_aggregation", "pool_parse_mode", "parallelism", "http",
                    "mock_profile"},
                   "");

    RunConfig cfg;
    if (j.contains("pool")) cfg.pool_path = as_string(j["pool"], "pool");
    if (j.contains("out")) cfg.out_dir = as_string(j["out"], "out");

    if (j.contains("method") && j.contains("methods")) {
        throw ConfigError("config keys 'method' and 'methods' are mutually exclusive");
    }
    auto parse_method = [](const std::string& name) {
        auto m = selector_from_name(name);
        if (!m) throw ConfigError("unknown selection method '" + name + "'");
        return *m;
    };
    if (j.contains("method")) {
        cfg.methods = {parse_method(as_string(j["method"], "method"))};
    } else if (j.contains("methods")) {
        if (!j["methods"].is_array() || j["methods"].empty()) {
            throw ConfigError("config key 'methods' must be a non-empty array of method names");
        }
        cfg.methods.clear();
        for (const auto& m : j["methods"]) cfg.methods.push_back(parse_method(as_string(m, "methods[]")));
    }

    if (j.contains("n")) cfg.n = static_cast<std::size_t>(as_unsigned(j["n"], "n"));
    if (j.contains("k")) cfg.gen.k = static_cast<int>(as_integer(j["k"], "k"));
    if (j.contains("temperature")) cfg.gen.temperature = as_number(j["temperature"], "temperature");
    if (j.contains("max_tokens")) cfg.gen.max_tokens = static_cast<int>(as_integer(j["max_tokens"], "max_tokens"));
    if (j.contains("seed")) cfg.seed = as_unsigned(j["seed"], "seed");

    if (j.contains("backend")) {
        const std::string name = as_string(j["backend"], "backend");
        auto b = backend_kind_from_name(name);
        if (!b) throw ConfigError("unknown backend '" + name + "' (expected mock or http)");
        cfg.backend = *b;
    }

    if (j.contains("tau_conf")) cfg.tau_conf = as_number(j["tau_conf"], "tau_conf");
    if (j.contains("tau_unc")) cfg.tau_unc = as_number(j["tau_unc"], "tau_unc");
    if (j.contains("lambda")) cfg.lambda = as_number(j["lambda"], "lambda");
    if (j.contains("gamma")) cfg.gamma = as_number(j["gamma"], "gamma");

    if (j.contains("weight_solver")) {
        const std::string name = as_string(j["weight_solver"], "weight_solver");
        if (name == "exact") {
            cfg.solver = WeightSolver::ExactVertex;
        } else if (name == "pgd") {
            cfg.solver = WeightSolver::ProjectedGradient;
        } else {
            throw ConfigError("unknown weight_solver '" + name + "' (expected exact or pgd)");
        }
    }
    if (j.contains("logprob_aggregation")) {
        const std::string name = as_string(j["logprob_aggregation"], "logprob_aggregation");
        auto a = logprob_aggregation_from_name(name);
        if (!a) throw ConfigError("unknown logprob_aggregation '" + name + "' (expected mean or sum)");
        cfg.agg = *a;
    }
    if (j.contains("pool_parse_mode")) {
        const std::string name = as_string(j["pool_parse_mode"], "pool_parse_mode");
        if (name == "strict") {
            cfg.parse_mode = PoolParseMode::Strict;
        } else if (name == "lenient") {
            cfg.parse_mode = PoolParseMode::Lenient;
        } else {
            throw ConfigError("unknown pool_parse_mode '" + name + "' (expected strict or lenient)");
        }
    }
    if (j.contains("parallelism")) cfg.parallelism = static_cast<int>(as_integer(j["parallelism"], "parallelism"));

    if (j.contains("http")) {
        const json& h = j["http"];
        if (!h.is_object()) throw ConfigError("config key 'http' must be an object");
        reject_unknown(h, {"base_url", "model", "timeout_seconds"}, "http.");
        if (h.contains("base_url")) cfg.http.base_url = as_string(h["base_url"], "http.base_url");
        if (h.contains("model")) cfg.http.model = as_string(h["model"], "http.model");
        if (h.contains("timeout_seconds")) cfg.http.timeout_seconds = as_number(h["timeout_seconds"], "http.timeout_seconds");
    }
    if (j.contains("mock_profile")) cfg.mock_profile = parse_mock_profile(j["mock_profile"]);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse config file '" + path + "': " + e.what());
    }
    return parse_run_config(j);
}

json config_snapshot(const RunConfig& cfg) {
    json j;
    j["pool"] = cfg.pool_path;
    json methods = json::array();
    for (SelectorMethod m : cfg.methods) methods.push_back(std::string(selector_name(m)));
    j["methods"] = std::move(methods);
    j["n"] = cfg.n;
    j["k"] = cfg.gen.k;
    j["temperature"] = cfg.gen.temperature;
    j["max_tokens"] = cfg.gen.max_tokens;
    j["seed"] = cfg.seed;
    j["backend"] = std::string(backend_kind_name(cfg.backend));
    j["tau_conf"] = cfg.tau_conf;
    j["tau_unc"] = cfg.tau_unc;
    j["lambda"] = cfg.lambda;
    j["gamma"] = cfg.gamma;
    j["weight_solver"] = cfg.solver == WeightSolver::ExactVertex ? "exact" : "pgd";
    j["logprob_aggregation"] = std::string(logprob_aggregation_name(cfg.agg));
    j["pool_parse_mode"] = cfg.parse_mode == PoolParseMode::Strict ? "strict" : "lenient";
    j["parallelism"] = cfg.parallelism;
    if (cfg.backend == BackendKind::Http) {
        json h;
        h["base_url"] = cfg.http.base_url;
        h["model"] = cfg.http.model;
        h["timeout_seconds"] = cfg.http.timeout_seconds;
        j["http"] = std::move(h);
    } else {
        j["mock_profile"] = profile_to_json(cfg.mock_profile);
    }
    return j;
}

std::unique_ptr<ModelBackend> make_backend(const RunConfig& cfg) {
    if (cfg.backend == BackendKind::Mock) {
        return std::make_unique<MockBackend>(cfg.mock_profile);
    }
    HttpBackendConfig http = cfg.http;
    if (const char* key = std::getenv("MICROPROBE_API_KEY")) http.api_key = key;
    return std::make_unique<HttpBackend>(std::move(http));
}

SelectionResult run_selection(const ProbePool& pool, SelectorMethod method, std::size_t n,
                              std::uint64_t seed,
                              const std::map<std::string, double>* pilot_uncertainty) {
    switch (method) {
        case SelectorMethod::Strategic: return select_strategic(pool, n, seed);
        case SelectorMethod::Random: return select_random(pool, n, seed);
        case SelectorMethod::Stratified: return select_stratified(pool, n, seed);
        case SelectorMethod::Difficulty: return select_by_difficulty(pool, n);
        case SelectorMethod::Length: return select_by_length(pool, n);
        case SelectorMethod::Uncertainty:
            if (pilot_uncertainty == nullptr) {
                throw ConfigError("uncertainty selection needs pilot uncertainty scores");
            }
            return select_by_uncertainty(pool, *pilot_uncertainty, n);
    }
    throw ConfigError("unknown selection method");
}

std::map<std::string, double> pilot_uncertainty_scores(const ProbePool& pool,
                                                       const RunConfig& cfg,
                                                       ModelBackend& backend) {
    GenerationParams params = cfg.gen;
    params.seed = derive_seed(cfg.seed, "pilot");
    const auto entries = generate_batch(backend, pool.probes, params, cfg.parallelism);

    std::map<std::string, double> scores;
    std::size_t failed = 0;
    std::string first_error;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].ok()) {
            if (failed == 0) first_error = entries[i].error;
            ++failed;
            continue;
        }
        const ResponseSet& rs = *entries[i].result;
        std::vector<double> lps;
        lps.reserve(rs.responses.size());
        for (const auto& r : rs.responses) lps.push_back(r.sequence_logprob(cfg.agg));
        scores[pool.probes[i].id] = uncertainty_score(lps);
    }
    if (failed > 0) {
        throw RunError("pilot generation failed for " + std::to_string(failed) +
                       " of " + std::to_string(pool.size()) + " probes (first error: " +
                       first_error + ")");
    }
    return scores;
}

DirectoryLock::DirectoryLock(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    path_ = (fs::path(dir) / "microprobe.lock").string();
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw RunError("output directory '" + dir +
                           "' is in use by another run; remove '" + path_ + "' if it is stale");
        }
        throw RunError("cannot create lock file '" + path_ + "': " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t written = ::write(fd, pid.data(), pid.size());
    (void)written;
    ::close(fd);
}

DirectoryLock::~DirectoryLock() { ::unlink(path_.c_str()); }

RunOutcome run_assessment(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.methods.size() != 1) {
        throw ConfigError("assessment runs exactly one method; use the comparison mode for several");
    }
    if (cfg.out_dir.empty()) throw ConfigError("an output directory is required");

    const auto t_total = Clock::now();
    PhaseTimings timings;

    std::vector<std::string> pool_warnings;
    const ProbePool pool = load_pool(cfg.pool_path, cfg.parse_mode, &pool_warnings);
    DirectoryLock lock(cfg.out_dir);
    const auto backend = make_backend(cfg);

    std::map<std::string, double> pilot;
    const std::map<std::string, double>* pilot_ptr = nullptr;
    if (cfg.methods[0] == SelectorMethod::Uncertainty) {
        const auto t0 = Clock::now();
        pilot = pilot_uncertainty_scores(pool, cfg, *backend);
        timings.generation += seconds_since(t0);
        pilot_ptr = &pilot;
    }

    const MethodRun mr = execute_method(pool, cfg.methods[0], cfg, *backend, pilot_ptr, timings);

    const auto t_stats = Clock::now();
    json stats = json::object();
    if (mr.assessments.size() >= 2) {
        stats["bootstrap_mean_consistency"] = bootstrap_to_json(
            bootstrap_ci(metric_vector(mr.assessments, false), 1000, 0.95,
                         derive_seed(cfg.seed, "bootstrap/consistency")));
        stats["bootstrap_mean_confidence"] = bootstrap_to_json(
            bootstrap_ci(metric_vector(mr.assessments, true), 1000, 0.95,
                         derive_seed(cfg.seed, "bootstrap/confidence")));
    }
    timings.statistics += seconds_since(t_stats);

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["kind"] = "assessment";
    report["config"] = config_snapshot(cfg);
    report["environment"] = capture_environment();
    report["pool"] = pool_to_json(pool, pool_warnings);
    report["selection"] = selection_to_json(mr.selection);
    report["assessments"] = assessments_to_json(mr.assessments);
    report["aggregate"] = aggregate_to_json(mr.aggregates);
    report["weights"] = weights_to_json(mr.weights, cfg.lambda, cfg.gamma, cfg.solver);
    report["composite_score"] = mr.score.value;
    report["statistics"] = std::move(stats);
    report["generation"] = generation_to_json(mr);
    report["timings"] = timings_to_json(timings, seconds_since(t_total));

    const std::string report_path = (fs::path(cfg.out_dir) / "report.json").string();
    write_report(report_path, report);
    write_text_atomic((fs::path(cfg.out_dir) / "assessments.csv").string(),
                      assessments_csv(mr.assessments));

    return RunOutcome{std::move(report), report_path, mr.failures.size()};
}

RunOutcome compare_methods(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.methods.size() < 2) throw ConfigError("comparison needs at least two methods");
    if (cfg.out_dir.empty()) throw ConfigError("an output directory is required");

    const auto t_total = Clock::now();
    PhaseTimings timings;

    std::vector<std::string> pool_warnings;
    const ProbePool pool = load_pool(cfg.pool_path, cfg.parse_mode, &pool_warnings);
    DirectoryLock lock(cfg.out_dir);
    const auto backend = make_backend(cfg);

    std::map<std::string, double> pilot;
    const std::map<std::string, double>* pilot_ptr = nullptr;
    const bool needs_pilot =
        std::any_of(cfg.methods.begin(), cfg.methods.end(),
                    [](SelectorMethod m) { return m == SelectorMethod::Uncertainty; });
    if (needs_pilot) {
        const auto t0 = Clock::now();
        pilot = pilot_uncertainty_scores(pool, cfg, *backend);
        timings.generation += seconds_since(t0);
        pilot_ptr = &pilot;
    }

    std::vector<std::optional<MethodRun>> runs;
    runs.reserve(cfg.methods.size());
    json method_errors = json::array();
    std::size_t failures = 0;
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
        try {
            runs.push_back(execute_method(pool, cfg.methods[i], cfg, *backend, pilot_ptr, timings));
            failures += runs.back()->failures.size();
        } catch (const std::exception& e) {
            runs.push_back(std::nullopt);
            ++failures;
            method_errors.push_back(json{{"method", std::string(selector_name(cfg.methods[i]))},
                                         {"index", i},
                                         {"error", e.what()}});
        }
    }

    std::vector<std::size_t> ok_indices;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].has_value()) ok_indices.push_back(i);
    }
    if (ok_indices.size() < 2) {
        throw RunError("comparison needs at least two successful methods; got " +
                       std::to_string(ok_indices.size()));
    }
    const std::size_t primary = ok_indices.front();

    const auto t_stats = Clock::now();
    json comparisons = json::array();
    for (std::size_t pos = 1; pos < ok_indices.size(); ++pos) {
        const std::size_t idx = ok_indices[pos];
        const MethodRun& ours = *runs[primary];
        const MethodRun& theirs = *runs[idx];
        json entry;
        entry["primary"] = std::string(selector_name(ours.selection.method));
        entry["baseline"] = std::string(selector_name(theirs.selection.method));
        entry["baseline_index"] = idx;
        entry["consistency"] = metric_stats(metric_vector(ours.assessments, false),
                                            metric_vector(theirs.assessments, false), cfg.seed,
                                            "consistency", idx);
        entry["confidence"] = metric_stats(metric_vector(ours.assessments, true),
                                           metric_vector(theirs.assessments, true), cfg.seed,
                                           "confidence", idx);
        comparisons.push_back(std::move(entry));
    }
    timings.statistics += seconds_since(t_stats);

    json methods_json = json::array();
    for (std::size_t i : ok_indices) {
        methods_json.push_back(method_section(*runs[i], i, cfg));
    }

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["kind"] = "comparison";
    report["config"] = config_snapshot(cfg);
    report["environment"] = capture_environment();
    report["pool"] = pool_to_json(pool, pool_warnings);
    report["primary_method"] = std::string(selector_name(cfg.methods[primary]));
    report["primary_index"] = primary;
    report["methods"] = std::move(methods_json);
    report["method_errors"] = std::move(method_errors);
    report["statistics"] = json{{"comparisons", std::move(comparisons)}};
    report["timings"] = timings_to_json(timings, seconds_since(t_total));

    const std::string report_path = (fs::path(cfg.out_dir) / "comparison.json").string();
    write_report(report_path, report);
    for (std::size_t i : ok_indices) {
        const std::string name = "assessments_" + std::to_string(i) + "_" +
                                 std::string(selector_name(cfg.methods[i])) + ".csv";
        write_text_atomic((fs::path(cfg.out_dir) / name).string(),
                          assessments_csv(runs[i]->assessments));
    }

    return RunOutcome{std::move(report), report_path, failures};
}

}  // namespace microprobe
