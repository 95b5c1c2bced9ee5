#include "doctest.h"

#include <atomic>
#include <cmath>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "microprobe/model_gateway.hpp"
#include "microprobe/rng.hpp"

using namespace microprobe;

namespace {

Probe make_probe(std::string id, Category cat = Category::FactualKnowledge) {
    Probe p;
    p.id = std::move(id);
    p.category = cat;
    p.text = "what is the capital of norway";
    return p;
}

ReliabilityProfile quiet_profile(double noise = 0.0, double spread = 0.0, double mean = -1.0) {
    CategoryProfile cp;
    cp.response_noise = noise;
    cp.logprob_spread = spread;
    cp.logprob_mean = mean;
    return ReliabilityProfile::uniform(cp);
}

bool identical_sets(const ResponseSet& a, const ResponseSet& b) {
    if (a.probe_id != b.probe_id || a.responses.size() != b.responses.size()) return false;
    for (std::size_t i = 0; i < a.responses.size(); ++i) {
        if (a.responses[i].text != b.responses[i].text) return false;
        if (a.responses[i].token_logprobs != b.responses[i].token_logprobs) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("generation params validation") {
    GenerationParams p;
    CHECK_NOTHROW(p.validate());

    p.k = 1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.k = 5;
    p.temperature = -0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.temperature = 0.0;
    p.max_tokens = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("sequence_logprob aggregation modes") {
    Response r;
    r.token_logprobs = {-1.0, -2.0, -3.0};
    CHECK(r.sequence_logprob(LogprobAggregation::Mean) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(r.sequence_logprob(LogprobAggregation::Sum) == doctest::Approx(-6.0).epsilon(1e-15));

    Response empty;
    CHECK_THROWS_AS(empty.sequence_logprob(LogprobAggregation::Mean), std::invalid_argument);
}

TEST_CASE("response set validation") {
    ResponseSet rs;
    rs.probe_id = "x";
    rs.responses.push_back({"a", {-1.0}});
    CHECK_THROWS_AS(rs.validate(), RunError);  // k >= 2

    rs.responses.push_back({"b", {}});
    CHECK_THROWS_WITH_AS(rs.validate(), doctest::Contains("without token log-probabilities"),
                         RunError);

    rs.responses[1].token_logprobs = {0.5};
    CHECK_THROWS_AS(rs.validate(), RunError);  // positive logprob

    rs.responses[1].token_logprobs = {-0.5};
    CHECK_NOTHROW(rs.validate());
}

TEST_CASE("profile validation") {
    CategoryProfile cp;
    cp.base_quality = 1.5;
    CHECK_THROWS_AS(ReliabilityProfile::uniform(cp).validate(), ConfigError);

    ReliabilityProfile profile = quiet_profile();
    profile.failure_rates[Category::EdgeCases] = 1.2;
    CHECK_THROWS_AS(profile.validate(), ConfigError);
    profile.failure_rates[Category::EdgeCases] = 0.8;
    CHECK_NOTHROW(profile.validate());
}

TEST_CASE("mock backend is a pure function of probe id, seed, and profile") {
    MockBackend backend(quiet_profile(0.3, 0.4, -1.2));
    GenerationParams params;
    params.seed = 99;

    const auto probe = make_probe("p1");
    const auto a = backend.generate(probe, params);
    const auto b = backend.generate(probe, params);
    CHECK(identical_sets(a, b));
    CHECK(a.responses.size() == 5);
    CHECK(a.backend_label == "mock");

    // a second instance with the same profile agrees too
    MockBackend other(quiet_profile(0.3, 0.4, -1.2));
    CHECK(identical_sets(other.generate(probe, params), a));

    params.seed = 100;
    CHECK_FALSE(identical_sets(backend.generate(probe, params), a));

    params.seed = 99;
    CHECK_FALSE(identical_sets(backend.generate(make_probe("p2"), params), a));
}

TEST_CASE("mock logprobs are clamped below zero") {
    MockBackend backend(quiet_profile(0.2, 3.0, -0.1));  // wide spread pushes toward 0
    GenerationParams params;
    params.seed = 3;
    const auto rs = backend.generate(make_probe("clamp"), params);
    for (const auto& r : rs.responses) {
        REQUIRE_FALSE(r.token_logprobs.empty());
        for (double lp : r.token_logprobs) CHECK(lp <= -1e-9);
    }
    CHECK_NOTHROW(rs.validate());
}

TEST_CASE("zero noise yields k identical texts") {
    MockBackend backend(quiet_profile(0.0, 0.0, -1.0));
    GenerationParams params;
    params.seed = 7;
    const auto rs = backend.generate(make_probe("stable"), params);
    for (const auto& r : rs.responses) {
        CHECK(r.text == rs.responses.front().text);
        // spread 0, mean -1: every sequence logprob is exactly -1
        CHECK(r.sequence_logprob(LogprobAggregation::Mean) == doctest::Approx(-1.0).epsilon(1e-12));
    }
}

TEST_CASE("base_quality shifts the logprob mean down") {
    CategoryProfile cp;
    cp.response_noise = 0.0;
    cp.logprob_spread = 0.0;
    cp.logprob_mean = -1.0;
    cp.base_quality = 0.4;
    MockBackend backend(ReliabilityProfile::uniform(cp));
    GenerationParams params;
    params.seed = 11;
    const auto rs = backend.generate(make_probe("shifted"), params);
    for (const auto& r : rs.responses) {
        CHECK(r.sequence_logprob(LogprobAggregation::Mean) ==
              doctest::Approx(-1.6).epsilon(1e-12));
    }
}

TEST_CASE("looks_degenerate flags tiny-vocabulary repetition only") {
    CHECK(MockBackend::looks_degenerate("yes yes yes yes yes yes."));
    CHECK(MockBackend::looks_degenerate("on and on and on and on."));
    CHECK_FALSE(MockBackend::looks_degenerate("yes yes."));  // too short to judge
    CHECK_FALSE(MockBackend::looks_degenerate("the quick brown fox jumps over the lazy dog."));
}

TEST_CASE("failure rate 1.0 collapses every response") {
    ReliabilityProfile profile = quiet_profile(0.0, 0.0, -1.0);
    profile.failure_rates[Category::EdgeCases] = 1.0;
    MockBackend backend(profile);
    GenerationParams params;
    params.seed = 13;

    const auto rs = backend.generate(make_probe("doomed", Category::EdgeCases), params);
    for (const auto& r : rs.responses) {
        CHECK(r.text == rs.responses.front().text);  // fixed per probe
        CHECK(MockBackend::looks_degenerate(r.text));
        // failure shifts the mean by -2.0
        CHECK(r.sequence_logprob(LogprobAggregation::Mean) ==
              doctest::Approx(-3.0).epsilon(1e-12));
    }

    // an unaffected category is untouched
    const auto ok = backend.generate(make_probe("fine", Category::FactualKnowledge), params);
    for (const auto& r : ok.responses) {
        CHECK(r.sequence_logprob(LogprobAggregation::Mean) ==
              doctest::Approx(-1.0).epsilon(1e-12));
    }
}

TEST_CASE("failure fraction tracks the configured rate") {
    const double rate = 0.3;
    ReliabilityProfile profile = quiet_profile(0.0, 0.0, -1.0);
    profile.failure_rates[Category::EdgeCases] = rate;
    MockBackend backend(profile);
    GenerationParams params;
    params.seed = 17;

    int degraded = 0, total = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto rs =
            backend.generate(make_probe("fp" + std::to_string(i), Category::EdgeCases), params);
        for (const auto& r : rs.responses) {
            // spread is 0, so the logprob level identifies a failure exactly
            degraded += r.sequence_logprob(LogprobAggregation::Mean) < -2.0 ? 1 : 0;
            ++total;
        }
    }
    const double se = std::sqrt(rate * (1 - rate) / total);
    CHECK(std::abs(double(degraded) / total - rate) < 3 * se);
}

TEST_CASE("generate_batch preserves input order at any parallelism") {
    MockBackend backend(quiet_profile(0.25, 0.4, -1.2));
    GenerationParams params;
    params.seed = 23;

    std::vector<Probe> probes;
    for (int i = 0; i < 17; ++i) {
        probes.push_back(make_probe("batch" + std::to_string(i),
                                    kAllCategories[static_cast<std::size_t>(i) % 5]));
    }

    const auto serial = generate_batch(backend, probes, params, 1);
    const auto parallel = generate_batch(backend, probes, params, 8);
    REQUIRE(serial.size() == probes.size());
    REQUIRE(parallel.size() == probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
        REQUIRE(serial[i].ok());
        REQUIRE(parallel[i].ok());
        CHECK(serial[i].result->probe_id == probes[i].id);
        CHECK(identical_sets(*serial[i].result, *parallel[i].result));
    }

    CHECK_THROWS_AS(generate_batch(backend, probes, params, 0), ConfigError);
}

namespace {

// Throws for a fixed set of probe ids; used to exercise partial failure.
class FlakyBackend final : public ModelBackend {
  public:
    explicit FlakyBackend(std::set<std::string> bad) : bad_(std::move(bad)), inner_(quiet_profile()) {}

    ResponseSet generate(const Probe& probe, const GenerationParams& params) override {
        if (bad_.count(probe.id)) throw RunError("injected failure for " + probe.id);
        return inner_.generate(probe, params);
    }
    std::string label() const override { return "flaky"; }

  private:
    std::set<std::string> bad_;
    MockBackend inner_;
};

}  // namespace

TEST_CASE("generate_batch carries per-probe failures as error entries") {
    FlakyBackend backend({"batch1"});
    GenerationParams params;
    params.seed = 1;
    std::vector<Probe> probes{make_probe("batch0"), make_probe("batch1"), make_probe("batch2")};

    const auto results = generate_batch(backend, probes, params, 2);
    REQUIRE(results.size() == 3);
    CHECK(results[0].ok());
    CHECK_FALSE(results[1].ok());
    CHECK(results[1].error.find("batch1") != std::string::npos);
    CHECK(results[2].ok());

    FlakyBackend all_bad({"batch0", "batch1", "batch2"});
    CHECK_THROWS_WITH_AS(generate_batch(all_bad, probes, params, 2),
                         doctest::Contains("all 3 generations failed"), RunError);
}

namespace {

// In-process completions endpoint for the HTTP backend tests.
class TestServer {
  public:
    explicit TestServer(httplib::Server::Handler handler) {
        server_.Post("/v1/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~TestServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

HttpBackendConfig fast_config(const std::string& base_url) {
    HttpBackendConfig cfg;
    cfg.base_url = base_url;
    cfg.model = "test-model";
    cfg.timeout_seconds = 5.0;
    cfg.retry_backoff_seconds = {0.0, 0.0};  // keep tests quick
    return cfg;
}

nlohmann::json make_choice(const std::string& text, std::vector<nlohmann::json> lps) {
    return {{"text", text}, {"logprobs", {{"token_logprobs", lps}}}};
}

}  // namespace

TEST_CASE("http backend round-trips a well-formed completion") {
    nlohmann::json seen_body;
    std::string seen_auth;
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        nlohmann::json reply;
        reply["choices"] = {
            make_choice("first answer", {nullptr, -0.5, -1.5}),  // leading null is dropped
            make_choice("second answer", {-0.25, -0.75}),
        };
        res.set_content(reply.dump(), "application/json");
    });

    auto cfg = fast_config(server.base_url());
    cfg.api_key = "sk-test";
    HttpBackend backend(cfg);
    CHECK(backend.label() == "http:test-model");

    GenerationParams params;
    params.k = 2;
    params.temperature = 0.4;
    params.max_tokens = 32;

    const auto rs = backend.generate(make_probe("h1"), params);
    REQUIRE(rs.responses.size() == 2);
    CHECK(rs.responses[0].text == "first answer");
    CHECK(rs.responses[0].token_logprobs == std::vector<double>{-0.5, -1.5});
    CHECK(rs.responses[1].token_logprobs == std::vector<double>{-0.25, -0.75});

    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["prompt"] == "what is the capital of norway");
    CHECK(seen_body["n"] == 2);
    CHECK(seen_body["temperature"] == 0.4);
    CHECK(seen_body["max_tokens"] == 32);
    CHECK(seen_body["logprobs"] == 1);
    CHECK(seen_auth == "Bearer sk-test");
}

TEST_CASE("http backend refuses responses without logprobs") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply;
        reply["choices"] = {{{"text", "a"}}, {{"text", "b"}}};
        res.set_content(reply.dump(), "application/json");
    });

    HttpBackend backend(fast_config(server.base_url()));
    GenerationParams params;
    params.k = 2;
    CHECK_THROWS_WITH_AS(backend.generate(make_probe("h2"), params),
                         doctest::Contains("no token log-probabilities"), RunError);
}

TEST_CASE("http backend retries 5xx and then succeeds") {
    std::atomic<int> calls{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) == 0) {
            res.status = 503;
            return;
        }
        nlohmann::json reply;
        reply["choices"] = {make_choice("ok", {-0.5}), make_choice("ok", {-0.5})};
        res.set_content(reply.dump(), "application/json");
    });

    HttpBackend backend(fast_config(server.base_url()));
    GenerationParams params;
    params.k = 2;
    const auto rs = backend.generate(make_probe("h3"), params);
    CHECK(rs.responses.size() == 2);
    CHECK(calls.load() == 2);
}

TEST_CASE("http backend treats 4xx as terminal") {
    std::atomic<int> calls{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.status = 404;
        res.set_content("no such model", "text/plain");
    });

    HttpBackend backend(fast_config(server.base_url()));
    GenerationParams params;
    params.k = 2;
    CHECK_THROWS_WITH_AS(backend.generate(make_probe("h4"), params),
                         doctest::Contains("HTTP 404"), RunError);
    CHECK(calls.load() == 1);  // no retry on client errors
}

TEST_CASE("http backend rejects a wrong choice count") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply;
        reply["choices"] = {make_choice("only one", {-0.5})};
        res.set_content(reply.dump(), "application/json");
    });

    HttpBackend backend(fast_config(server.base_url()));
    GenerationParams params;
    params.k = 3;
    CHECK_THROWS_WITH_AS(backend.generate(make_probe("h5"), params),
                         doctest::Contains("expected 3"), RunError);
}

TEST_CASE("http backend surfaces exhausted retries") {
    auto cfg = fast_config("http://127.0.0.1:9");  // nothing listens here
    cfg.retry_backoff_seconds = {0.0};
    cfg.timeout_seconds = 0.5;
    HttpBackend backend(cfg);
    GenerationParams params;
    params.k = 2;
    CHECK_THROWS_WITH_AS(backend.generate(make_probe("h6"), params),
                         doctest::Contains("after 2 attempts"), RunError);
}

TEST_CASE("http backend config validation") {
    HttpBackendConfig cfg;
    cfg.model = "m";
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);
    cfg.base_url = "http://x";
    cfg.model = "";
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);
}
