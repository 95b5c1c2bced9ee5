#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace microprobe {

struct TestResult {
    std::string test_name;
    double statistic = 0.0;
    double p_value = 1.0;
    double df = 0.0;  // Welch-Satterthwaite or pooled df; 0 for rank tests
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    bool two_sided = true;
    bool exact = false;  // Mann-Whitney only: exact enumeration vs normal approximation
};

struct EffectSizes {
    double cohens_d = 0.0;
    double hedges_g = 0.0;
    double glass_delta = 0.0;
};

struct BootstrapCI {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;
};

struct StabilityResult {
    std::vector<double> fold_improvements;  // per-fold mean improvement
    double mean = 0.0;                      // arithmetic mean of the fold means
    double std_dev = 0.0;                   // sample std of the fold means
    double stability_coefficient = 0.0;     // 1 - std/|mean|, clamped to [0,1]
    double ci_lower = 0.0;
    double ci_upper = 0.0;
};

// --- distribution functions -------------------------------------------------

double normal_cdf(double x);

// Inverse of normal_cdf on (0,1).
double normal_quantile(double p);

// I_x(a,b), evaluated with the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double students_t_cdf(double t, double df);

// --- location tests ----------------------------------------------------------

TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Equal-variance variant with n1+n2-2 degrees of freedom.
TestResult pooled_t_test(std::span<const double> a, std::span<const double> b);

// U = min(U1, U2) from midranks. Exact enumeration of all C(n1+n2, n1)
// labelings when n1+n2 <= 16; otherwise normal approximation with tie and
// continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// --- effect sizes ------------------------------------------------------------

double cohens_d(std::span<const double> a, std::span<const double> b);
double hedges_g(std::span<const double> a, std::span<const double> b);
double glass_delta(std::span<const double> treatment, std::span<const double> control);
EffectSizes effect_sizes(std::span<const double> treatment, std::span<const double> control);

// --- resampling / power / reliability ----------------------------------------

// Percentile bootstrap of the sample mean. Iteration i draws from an
// independent stream derived from (seed, "bootstrap", i), so results do not
// depend on evaluation order.
BootstrapCI bootstrap_ci(std::span<const double> samples, std::size_t iterations = 1000,
                         double level = 0.95, std::uint64_t seed = 0);

// Normal-approximation power of a two-sided two-sample test:
// phi(|d| * sqrt(n/2) - z_{1-alpha/2}).
double power_two_sample(double d, std::size_t n_per_group, double alpha = 0.05);

// ratings[r][i] = rater r's score for item i. Each rater is one component
// of the composite scale; variances are taken across items.
double cronbach_alpha(const std::vector<std::vector<double>>& ratings);

// Seeded shuffle, split into k near-equal folds, mean improvement per fold.
StabilityResult kfold_stability(std::span<const double> per_probe_improvements, std::size_t k,
                                std::uint64_t seed);

}  // namespace microprobe
