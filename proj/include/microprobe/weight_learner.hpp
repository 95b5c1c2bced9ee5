#pragma once

#include "microprobe/reliability_metrics.hpp"

namespace microprobe {

struct WeightVector {
    double w_cons = 1.0;
    double w_conf = 0.0;
    double w_hcr = 0.0;

    // Sum-to-one within 1e-9 and all components non-negative.
    bool valid() const;
};

struct CompositeScore {
    double value = 0.0;
    WeightVector weights;
    double lambda = 0.0;
    AggregateMetrics inputs;
};

inline constexpr double kDefaultLambda = 0.5;

enum class WeightSolver {
    ExactVertex,        // default: argmax of {mean_consistency, mean_confidence, hcr}
    ProjectedGradient,  // iterative solver, converges to the same vertex
};

// Picks weights on the probability simplex maximizing
// w_cons*C + w_conf*Conf + w_hcr*HCR - lambda*U. The uncertainty term does
// not depend on w, so the optimum is the vertex of the largest mean; ties
// go to the earlier index in (cons, conf, hcr) order. With gamma > 0 an
// entropy regularizer gamma*sum(w log w) is subtracted from the loss,
// giving the interior point softmax(means / gamma) in closed form.
WeightVector learn_weights(const AggregateMetrics& agg, double lambda = kDefaultLambda,
                           WeightSolver solver = WeightSolver::ExactVertex, double gamma = 0.0);

CompositeScore composite_score(const AggregateMetrics& agg, const WeightVector& w,
                               double lambda = kDefaultLambda);

}  // namespace microprobe
