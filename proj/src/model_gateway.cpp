#include "microprobe/model_gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "microprobe/rng.hpp"
#include "microprobe/text.hpp"

namespace microprobe {

namespace {

constexpr double kLogprobCeiling = -1e-9;

// Word bank for mock sentence assembly.
constexpr std::array<const char*, 48> kWordBank = {
    "the",     "model",   "answer",  "depends", "on",       "context",  "because",
    "several", "factors", "interact", "with",   "careful",  "analysis", "shows",
    "that",    "outcome", "remains", "stable",  "under",    "typical",  "conditions",
    "however", "edge",    "inputs",  "may",     "shift",    "results",  "toward",
    "greater", "variance", "while",  "core",    "behavior", "stays",    "consistent",
    "across",  "repeated", "trials", "and",     "settings", "observed", "evidence",
    "supports", "this",   "general", "claim",   "about",    "reliability"};

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    out += '.';
    return out;
}

std::vector<std::string> base_sentence(Rng& rng, int max_tokens) {
    const std::size_t len =
        std::min<std::size_t>(8 + rng.uniform_below(9), std::max(1, max_tokens));
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        tokens.emplace_back(kWordBank[rng.uniform_below(kWordBank.size())]);
    }
    return tokens;
}

// Mode-collapse failure text: a handful of words repeated, identical for
// every failed response of the same probe.
std::string degenerate_sentence(Rng& rng, int max_tokens) {
    std::array<std::string, MockBackend::kDegenerateVocab> words;
    for (auto& w : words) w = kWordBank[rng.uniform_below(kWordBank.size())];
    const std::size_t len = std::min<std::size_t>(9, std::max(1, max_tokens));
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(words[i % words.size()]);
    return join_tokens(tokens);
}

}  // namespace

std::string_view logprob_aggregation_name(LogprobAggregation a) {
    return a == LogprobAggregation::Mean ? "mean" : "sum";
}

std::optional<LogprobAggregation> logprob_aggregation_from_name(std::string_view name) {
    if (name == "mean") return LogprobAggregation::Mean;
    if (name == "sum") return LogprobAggregation::Sum;
    return std::nullopt;
}

void GenerationParams::validate() const {
    if (k < 2) throw ConfigError("generation k must be >= 2 (consistency needs pairs)");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

double Response::sequence_logprob(LogprobAggregation agg) const {
    if (token_logprobs.empty()) {
        throw std::invalid_argument("response has no token log-probabilities");
    }
    double sum = 0.0;
    for (double lp : token_logprobs) sum += lp;
    if (agg == LogprobAggregation::Sum) return sum;
    return sum / static_cast<double>(token_logprobs.size());
}

void ResponseSet::validate() const {
    if (responses.size() < 2) throw RunError("response set needs k >= 2 responses");
    for (const auto& r : responses) {
        if (r.token_logprobs.empty()) {
            throw RunError("response without token log-probabilities in set for probe '" +
                           probe_id + "'");
        }
        for (double lp : r.token_logprobs) {
            if (!std::isfinite(lp) || lp > 0.0) {
                throw RunError("non-finite or positive token log-probability for probe '" +
                               probe_id + "'");
            }
        }
    }
}

void ReliabilityProfile::validate() const {
    for (const auto& p : categories) {
        if (p.base_quality < 0.0 || p.base_quality > 1.0) {
            throw ConfigError("profile base_quality must be in [0,1]");
        }
        if (p.response_noise < 0.0) throw ConfigError("profile response_noise must be >= 0");
        if (p.logprob_mean > 0.0) throw ConfigError("profile logprob_mean must be <= 0");
        if (p.logprob_spread < 0.0) throw ConfigError("profile logprob_spread must be >= 0");
    }
    for (const auto& [cat, rate] : failure_rates) {
        (void)cat;
        if (rate < 0.0 || rate > 1.0) throw ConfigError("failure_rate must be in [0,1]");
    }
}

ReliabilityProfile ReliabilityProfile::uniform(const CategoryProfile& p) {
    ReliabilityProfile profile;
    profile.categories.fill(p);
    return profile;
}

MockBackend::MockBackend(ReliabilityProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
}

bool MockBackend::looks_degenerate(const std::string& text) {
    const auto tokens = tokenize(text);
    if (tokens.size() < 6) return false;
    const std::set<std::string> distinct(tokens.begin(), tokens.end());
    return distinct.size() <= kDegenerateVocab;
}

ResponseSet MockBackend::generate(const Probe& probe, const GenerationParams& params) {
    params.validate();
    const CategoryProfile& cp = profile_.categories[category_index(probe.category)];
    const auto failure_it = profile_.failure_rates.find(probe.category);
    const double failure_rate =
        failure_it == profile_.failure_rates.end() ? 0.0 : failure_it->second;

    const uint64_t probe_seed = derive_seed(params.seed, "mock/gen", fnv1a64(probe.id));
    Rng base_rng(derive_seed(probe_seed, "mock/base"));
    const std::vector<std::string> base = base_sentence(base_rng, params.max_tokens);
    Rng fail_rng(derive_seed(probe_seed, "mock/fail-text"));
    const std::string fail_text = degenerate_sentence(fail_rng, params.max_tokens);

    const double quality_shift = 1.0 - cp.base_quality;

    ResponseSet rs;
    rs.probe_id = probe.id;
    rs.backend_label = label();
    rs.responses.reserve(params.k);
    for (int j = 0; j < params.k; ++j) {
        Rng rng(derive_seed(probe_seed, "mock/resp", static_cast<uint64_t>(j)));
        const bool failed = failure_rate > 0.0 && rng.bernoulli(failure_rate);

        Response resp;
        double lp_mean = cp.logprob_mean - quality_shift;
        double lp_spread = cp.logprob_spread;
        if (failed) {
            resp.text = fail_text;
            lp_mean -= 2.0;
            lp_spread *= 2.0;
        } else {
            std::vector<std::string> tokens;
            tokens.reserve(base.size());
            for (const auto& tok : base) {
                if (cp.response_noise > 0.0 && rng.bernoulli(cp.response_noise)) {
                    if (rng.bernoulli(0.5)) continue;  // drop
                    tokens.emplace_back(kWordBank[rng.uniform_below(kWordBank.size())]);
                } else {
                    tokens.push_back(tok);
                }
            }
            resp.text = join_tokens(tokens);
        }

        const std::size_t n_tokens = std::max<std::size_t>(1, tokenize(resp.text).size());
        resp.token_logprobs.reserve(n_tokens);
        for (std::size_t t = 0; t < n_tokens; ++t) {
            resp.token_logprobs.push_back(
                std::min(rng.normal(lp_mean, lp_spread), kLogprobCeiling));
        }
        rs.responses.push_back(std::move(resp));
    }
    return rs;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("http backend requires a base_url");
    if (config_.model.empty()) throw ConfigError("http backend requires a model name");
}

ResponseSet HttpBackend::generate(const Probe& probe, const GenerationParams& params) {
    params.validate();

    nlohmann::json body{{"model", config_.model}, {"prompt", probe.text},
                        {"n", params.k},          {"temperature", params.temperature},
                        {"max_tokens", params.max_tokens}, {"logprobs", 1}};
    const std::string payload = body.dump();

    std::string last_error;
    const std::size_t max_attempts = config_.retry_backoff_seconds.size() + 1;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) {
            const double sleep_s = config_.retry_backoff_seconds[attempt - 1];
            std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }

        auto res = client.Post("/v1/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "connection failure: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status >= 500) {
            last_error = "server error HTTP " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status >= 400) {
            throw RunError("backend rejected request with HTTP " + std::to_string(res->status) +
                           " for probe '" + probe.id + "': " + res->body);
        }

        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array()) {
            throw RunError("malformed completions response for probe '" + probe.id + "'");
        }
        const auto& choices = reply["choices"];
        if (static_cast<int>(choices.size()) != params.k) {
            throw RunError("backend returned " + std::to_string(choices.size()) +
                           " choices, expected " + std::to_string(params.k));
        }

        ResponseSet rs;
        rs.probe_id = probe.id;
        rs.backend_label = label();
        for (const auto& choice : choices) {
            Response resp;
            resp.text = choice.value("text", std::string());
            if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
                !choice["logprobs"].contains("token_logprobs")) {
                throw RunError(
                    "backend response carries no token log-probabilities; "
                    "configure a logprobs-capable endpoint (probe '" +
                    probe.id + "')");
            }
            for (const auto& lp : choice["logprobs"]["token_logprobs"]) {
                if (lp.is_null()) continue;  // leading prompt token convention
                resp.token_logprobs.push_back(lp.get<double>());
            }
            if (resp.token_logprobs.empty()) {
                throw RunError("backend returned an empty token_logprobs array for probe '" +
                               probe.id + "'");
            }
            rs.responses.push_back(std::move(resp));
        }
        rs.validate();
        return rs;
    }
    throw RunError("backend unreachable after " + std::to_string(max_attempts) +
                   " attempts: " + last_error);
}

std::vector<BatchEntry> generate_batch(ModelBackend& backend, const std::vector<Probe>& probes,
                                       const GenerationParams& params, int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    std::vector<BatchEntry> results(probes.size());
    if (probes.empty()) return results;

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= probes.size()) break;
            try {
                results[i].result = backend.generate(probes[i], params);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(parallelism), probes.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    const bool any_ok =
        std::any_of(results.begin(), results.end(), [](const BatchEntry& e) { return e.ok(); });
    if (!any_ok) {
        throw RunError("all " + std::to_string(probes.size()) +
                       " generations failed; first error: " + results.front().error);
    }
    return results;
}

}  // namespace microprobe
