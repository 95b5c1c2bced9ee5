#include "microprobe/weight_learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace microprobe {

namespace {

// Euclidean projection onto the probability simplex (Duchi et al. 2008).
std::array<double, 3> project_simplex(std::array<double, 3> v) {
    std::array<double, 3> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(x - theta, 0.0);
    return v;
}

std::array<double, 3> means_of(const AggregateMetrics& agg) {
    return {agg.mean_consistency, agg.mean_confidence, agg.hcr};
}

void check_finite(const std::array<double, 3>& m) {
    for (double x : m) {
        if (!std::isfinite(x)) throw std::invalid_argument("aggregate means must be finite");
    }
}

std::size_t argmax_earliest(const std::array<double, 3>& m) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (m[i] > m[best]) best = i;
    }
    return best;
}

WeightVector from_array(const std::array<double, 3>& w) {
    return WeightVector{w[0], w[1], w[2]};
}

}  // namespace

bool WeightVector::valid() const {
    const double sum = w_cons + w_conf + w_hcr;
    return w_cons >= 0.0 && w_conf >= 0.0 && w_hcr >= 0.0 && std::abs(sum - 1.0) <= 1e-9;
}

WeightVector learn_weights(const AggregateMetrics& agg, double lambda, WeightSolver solver,
                           double gamma) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    const auto m = means_of(agg);
    check_finite(m);

    if (gamma > 0.0) {
        // Entropy-regularized optimum is softmax(m / gamma); subtract the max
        // before exponentiating for numerical stability.
        const double hi = *std::max_element(m.begin(), m.end());
        std::array<double, 3> w{};
        double z = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            w[i] = std::exp((m[i] - hi) / gamma);
            z += w[i];
        }
        for (auto& x : w) x /= z;
        return from_array(w);
    }

    if (solver == WeightSolver::ExactVertex) {
        std::array<double, 3> w{0.0, 0.0, 0.0};
        w[argmax_earliest(m)] = 1.0;
        return from_array(w);
    }

    // Projected gradient ascent from the simplex center. The objective is
    // affine, so a step size that keeps doubling eventually lands every
    // coordinate outside the simplex except the winner, and the projection
    // then returns the exact vertex.
    std::array<double, 3> w{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double step = 0.1;
    for (int iter = 0; iter < 200; ++iter) {
        std::array<double, 3> next = w;
        for (std::size_t i = 0; i < 3; ++i) next[i] += step * m[i];
        next = project_simplex(next);
        double delta = 0.0;
        for (std::size_t i = 0; i < 3; ++i) delta = std::max(delta, std::abs(next[i] - w[i]));
        w = next;
        if (delta == 0.0 && iter > 0) break;
        step *= 2.0;
    }
    return from_array(w);
}

CompositeScore composite_score(const AggregateMetrics& agg, const WeightVector& w, double lambda) {
    if (!w.valid()) throw std::invalid_argument("weights must lie on the probability simplex");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    const auto m = means_of(agg);
    check_finite(m);
    if (!std::isfinite(agg.mean_uncertainty)) {
        throw std::invalid_argument("aggregate uncertainty must be finite");
    }
    CompositeScore s;
    s.value = w.w_cons * m[0] + w.w_conf * m[1] + w.w_hcr * m[2] - lambda * agg.mean_uncertainty;
    s.weights = w;
    s.lambda = lambda;
    s.inputs = agg;
    return s;
}

}  // namespace microprobe
