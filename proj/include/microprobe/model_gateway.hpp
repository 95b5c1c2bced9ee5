#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "microprobe/probe_catalog.hpp"

namespace microprobe {

enum class LogprobAggregation { Mean, Sum };

std::string_view logprob_aggregation_name(LogprobAggregation a);
std::optional<LogprobAggregation> logprob_aggregation_from_name(std::string_view name);

struct GenerationParams {
    int k = 5;  // responses per probe, >= 2 (consistency needs pairs)
    double temperature = 0.7;
    int max_tokens = 64;
    uint64_t seed = 0;  // consumed by the mock backend only

    void validate() const;
};

struct Response {
    std::string text;
    std::vector<double> token_logprobs;  // finite, <= 0

    // Sequence log-probability: length-normalized mean by default, raw sum
    // behind the config switch.
    double sequence_logprob(LogprobAggregation agg) const;
};

struct ResponseSet {
    std::string probe_id;
    std::vector<Response> responses;
    std::string backend_label;

    void validate() const;
};

// Per-category behavior of the mock simulator.
//   base_quality  shifts the per-token log-probability mean down by
//                 (1 - base_quality); 1.0 leaves logprob_mean untouched.
//   response_noise  per-token probability of a swap/drop perturbation.
//   logprob_mean/logprob_spread  normal distribution of per-token
//                 log-probabilities, clamped to <= -1e-9.
struct CategoryProfile {
    double base_quality = 1.0;
    double response_noise = 0.2;
    double logprob_mean = -1.2;
    double logprob_spread = 0.4;
};

// A failed response (drawn per response at the category failure rate)
// collapses to a degenerate repetition fixed per probe, with the logprob
// mean shifted down by 2.0 and the spread doubled.
struct ReliabilityProfile {
    std::array<CategoryProfile, kCategoryCount> categories{};
    std::map<Category, double> failure_rates;

    void validate() const;
    static ReliabilityProfile uniform(const CategoryProfile& p);
};

class ModelBackend {
  public:
    virtual ~ModelBackend() = default;
    virtual ResponseSet generate(const Probe& probe, const GenerationParams& params) = 0;
    virtual std::string label() const = 0;
};

// Pure function of (probe.id, params.seed, profile): invariant to
// parallelism, call order and wall clock.
class MockBackend final : public ModelBackend {
  public:
    explicit MockBackend(ReliabilityProfile profile);

    ResponseSet generate(const Probe& probe, const GenerationParams& params) override;
    std::string label() const override { return "mock"; }

    // Failed responses collapse to <= kDegenerateVocab distinct tokens;
    // normal sentences draw from a much wider bank.
    static bool looks_degenerate(const std::string& text);
    static constexpr std::size_t kDegenerateVocab = 3;

  private:
    ReliabilityProfile profile_;
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://localhost:8080"
    std::string model;
    std::string api_key;         // sent as a bearer token when non-empty
    double timeout_seconds = 30.0;
    // One retry per entry on 5xx/timeouts, sleeping entry seconds first.
    // 4xx responses are terminal.
    std::vector<double> retry_backoff_seconds = {0.5, 1.0, 2.0};
};

// OpenAI-compatible completions protocol: POST {base_url}/v1/completions
// with n=k and logprobs=1; requires per-choice logprobs.token_logprobs.
// Responses without log-probabilities are an error, never fabricated.
class HttpBackend final : public ModelBackend {
  public:
    explicit HttpBackend(HttpBackendConfig config);

    ResponseSet generate(const Probe& probe, const GenerationParams& params) override;
    std::string label() const override { return "http:" + config_.model; }

  private:
    HttpBackendConfig config_;
};

struct BatchEntry {
    std::optional<ResponseSet> result;
    std::string error;  // empty on success

    bool ok() const { return result.has_value(); }
};

// Bounded parallelism; results restored to input probe order. Per-probe
// failures become error entries; throws only if every probe fails.
std::vector<BatchEntry> generate_batch(ModelBackend& backend, const std::vector<Probe>& probes,
                                       const GenerationParams& params, int parallelism);

}  // namespace microprobe
