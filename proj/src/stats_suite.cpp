#include "microprobe/stats_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "microprobe/rng.hpp"

namespace microprobe {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample variance, n-1 denominator.
double variance_of(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) {
        const double d = x - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(v.size() - 1);
}

void require_min_size(std::span<const double> v, std::size_t n, const char* what) {
    if (v.size() < n) throw std::invalid_argument(std::string(what) + ": sample too small");
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

std::vector<double> midranks(const std::vector<double>& pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[k] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile needs p in (0,1)");

    // Acklam's rational approximation, then one Newton step against the
    // high-precision CDF.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }

    const double err = normal_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
    if (pdf > 0.0) x -= err / pdf;
    return x;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta needs a, b > 0");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta needs x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cf(a, b, x) / a;
    }
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double students_t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("t CDF needs df > 0");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    require_min_size(a, 2, "welch_t_test");
    require_min_size(b, 2, "welch_t_test");
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double m1 = mean_of(a);
    const double m2 = mean_of(b);
    const double v1 = variance_of(a, m1);
    const double v2 = variance_of(b, m2);
    if (v1 <= 0.0 || v2 <= 0.0) throw std::invalid_argument("welch_t_test: zero variance sample");

    const double se1 = v1 / n1;
    const double se2 = v2 / n2;
    const double t = (m1 - m2) / std::sqrt(se1 + se2);
    const double df = (se1 + se2) * (se1 + se2) /
                      (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0));

    TestResult r;
    r.test_name = "welch_t";
    r.statistic = t;
    r.df = df;
    r.p_value = 2.0 * students_t_cdf(-std::abs(t), df);
    r.n1 = a.size();
    r.n2 = b.size();
    return r;
}

TestResult pooled_t_test(std::span<const double> a, std::span<const double> b) {
    require_min_size(a, 2, "pooled_t_test");
    require_min_size(b, 2, "pooled_t_test");
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double m1 = mean_of(a);
    const double m2 = mean_of(b);
    const double v1 = variance_of(a, m1);
    const double v2 = variance_of(b, m2);
    const double sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
    if (sp2 <= 0.0) throw std::invalid_argument("pooled_t_test: zero pooled variance");

    const double t = (m1 - m2) / (std::sqrt(sp2) * std::sqrt(1.0 / n1 + 1.0 / n2));
    TestResult r;
    r.test_name = "pooled_t";
    r.statistic = t;
    r.df = n1 + n2 - 2.0;
    r.p_value = 2.0 * students_t_cdf(-std::abs(t), r.df);
    r.n1 = a.size();
    r.n2 = b.size();
    return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::size_t n = n1 + n2;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = pooled[order[i]];
    const std::vector<double> ranks = midranks(sorted);

    double r1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (order[i] < n1) r1 += ranks[i];
    }
    const double nn = static_cast<double>(n1) * static_cast<double>(n2);
    const double u1 = r1 - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    const double u = std::min(u1, nn - u1);

    TestResult r;
    r.test_name = "mann_whitney_u";
    r.statistic = u;
    r.n1 = n1;
    r.n2 = n2;

    if (n <= 16) {
        // Walk every way to assign n1 of the pooled ranks to the first
        // group and count assignments at least as extreme as observed.
        r.exact = true;
        const double half_n1 = 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
        std::size_t extreme = 0;
        std::size_t total = 0;
        std::vector<std::size_t> idx(n1);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            double rs = 0.0;
            for (std::size_t i : idx) rs += ranks[i];
            const double cu1 = rs - half_n1;
            if (std::min(cu1, nn - cu1) <= u + 1e-9) ++extreme;
            ++total;
            // next combination in lexicographic order
            std::size_t i = n1;
            while (i > 0) {
                --i;
                if (idx[i] != i + n - n1) {
                    ++idx[i];
                    for (std::size_t j = i + 1; j < n1; ++j) idx[j] = idx[j - 1] + 1;
                    break;
                }
                if (i == 0) {
                    idx.clear();
                    break;
                }
            }
            if (idx.empty()) break;
        }
        r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return r;
    }

    const double mu = 0.5 * nn;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double dn = static_cast<double>(n);
    const double sigma2 = nn / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (sigma2 <= 0.0) {
        r.p_value = 1.0;  // every observation tied
        return r;
    }
    const double z = (u - mu + 0.5) / std::sqrt(sigma2);
    r.p_value = std::min(1.0, 2.0 * normal_cdf(z));
    return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
    require_min_size(a, 2, "cohens_d");
    require_min_size(b, 2, "cohens_d");
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double m1 = mean_of(a);
    const double m2 = mean_of(b);
    const double v1 = variance_of(a, m1);
    const double v2 = variance_of(b, m2);
    const double sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
    if (sp2 <= 0.0) throw std::invalid_argument("cohens_d: zero pooled variance");
    return (m1 - m2) / std::sqrt(sp2);
}

double hedges_g(std::span<const double> a, std::span<const double> b) {
    const double d = cohens_d(a, b);
    const double nt = static_cast<double>(a.size() + b.size());
    return d * (1.0 - 3.0 / (4.0 * nt - 9.0));
}

double glass_delta(std::span<const double> treatment, std::span<const double> control) {
    require_min_size(treatment, 2, "glass_delta");
    require_min_size(control, 2, "glass_delta");
    const double mc = mean_of(control);
    const double vc = variance_of(control, mc);
    if (vc <= 0.0) throw std::invalid_argument("glass_delta: zero control variance");
    return (mean_of(treatment) - mc) / std::sqrt(vc);
}

EffectSizes effect_sizes(std::span<const double> treatment, std::span<const double> control) {
    EffectSizes e;
    e.cohens_d = cohens_d(treatment, control);
    e.hedges_g = hedges_g(treatment, control);
    e.glass_delta = glass_delta(treatment, control);
    return e;
}

BootstrapCI bootstrap_ci(std::span<const double> samples, std::size_t iterations, double level,
                         std::uint64_t seed) {
    require_min_size(samples, 2, "bootstrap_ci");
    if (iterations < 100) throw std::invalid_argument("bootstrap_ci: iterations must be >= 100");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must be in (0,1)");

    const std::size_t n = samples.size();
    std::vector<double> stats(iterations);
    for (std::size_t it = 0; it < iterations; ++it) {
        Rng rng(derive_seed(seed, "bootstrap", it));
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += samples[rng.uniform_below(n)];
        stats[it] = s / static_cast<double>(n);
    }
    std::sort(stats.begin(), stats.end());

    auto percentile = [&](double q) {
        const double pos = q * static_cast<double>(iterations - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= iterations) return stats.back();
        return stats[lo] * (1.0 - frac) + stats[lo + 1] * frac;
    };

    BootstrapCI ci;
    ci.level = level;
    ci.iterations = iterations;
    ci.seed = seed;
    const double tail = 0.5 * (1.0 - level);
    ci.lower = percentile(tail);
    ci.upper = percentile(1.0 - tail);
    return ci;
}

double power_two_sample(double d, std::size_t n_per_group, double alpha) {
    if (n_per_group < 2) throw std::invalid_argument("power_two_sample: n must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("power_two_sample: alpha must be in (0,1)");
    const double z_crit = normal_quantile(1.0 - 0.5 * alpha);
    return normal_cdf(std::abs(d) * std::sqrt(static_cast<double>(n_per_group) / 2.0) - z_crit);
}

double cronbach_alpha(const std::vector<std::vector<double>>& ratings) {
    const std::size_t k = ratings.size();
    if (k < 2) throw std::invalid_argument("cronbach_alpha: needs at least 2 raters");
    const std::size_t items = ratings.front().size();
    if (items < 2) throw std::invalid_argument("cronbach_alpha: needs at least 2 items");
    for (const auto& row : ratings) {
        if (row.size() != items) throw std::invalid_argument("cronbach_alpha: ragged ratings matrix");
    }

    double sum_rater_var = 0.0;
    for (const auto& row : ratings) {
        const double m = mean_of(row);
        sum_rater_var += variance_of(row, m);
    }

    std::vector<double> totals(items, 0.0);
    for (const auto& row : ratings) {
        for (std::size_t i = 0; i < items; ++i) totals[i] += row[i];
    }
    const double mt = mean_of(totals);
    const double var_total = variance_of(totals, mt);
    if (var_total <= 0.0) throw std::invalid_argument("cronbach_alpha: zero total-score variance");

    const double kd = static_cast<double>(k);
    return kd / (kd - 1.0) * (1.0 - sum_rater_var / var_total);
}

StabilityResult kfold_stability(std::span<const double> per_probe_improvements, std::size_t k,
                                std::uint64_t seed) {
    const std::size_t n = per_probe_improvements.size();
    if (k < 2) throw std::invalid_argument("kfold_stability: k must be >= 2");
    if (n < k) throw std::invalid_argument("kfold_stability: more folds than samples");

    std::vector<double> shuffled(per_probe_improvements.begin(), per_probe_improvements.end());
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(shuffled);

    StabilityResult res;
    res.fold_improvements.reserve(k);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        // a constant fold averages to exactly that constant; summing would
        // leave ulp-level noise that turns degenerate inputs into nonzero std
        bool constant = true;
        for (std::size_t i = 1; i < len; ++i) {
            constant = constant && shuffled[pos + i] == shuffled[pos];
        }
        if (constant) {
            res.fold_improvements.push_back(shuffled[pos]);
        } else {
            double s = 0.0;
            for (std::size_t i = 0; i < len; ++i) s += shuffled[pos + i];
            res.fold_improvements.push_back(s / static_cast<double>(len));
        }
        pos += len;
    }

    const bool degenerate =
        std::all_of(res.fold_improvements.begin(), res.fold_improvements.end(),
                    [&](double m) { return m == res.fold_improvements.front(); });
    if (degenerate) {
        res.mean = res.fold_improvements.front();
        res.std_dev = 0.0;
    } else {
        res.mean = mean_of(res.fold_improvements);
        res.std_dev = std::sqrt(variance_of(res.fold_improvements, res.mean));
    }
    if (res.std_dev == 0.0) {
        res.stability_coefficient = 1.0;
    } else if (res.mean == 0.0) {
        res.stability_coefficient = 0.0;
    } else {
        res.stability_coefficient = std::clamp(1.0 - res.std_dev / std::abs(res.mean), 0.0, 1.0);
    }
    const double half = 1.959963984540054 * res.std_dev / std::sqrt(static_cast<double>(k));
    res.ci_lower = res.mean - half;
    res.ci_upper = res.mean + half;
    return res;
}

}  // namespace microprobe
