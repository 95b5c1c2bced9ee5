#pragma once

#include <span>
#include <string>
#include <vector>

#include "microprobe/model_gateway.hpp"

namespace microprobe {

struct ProbeAssessment {
    std::string probe_id;
    double jaccard = 0.0;
    double semantic = 0.0;
    double structural = 0.0;
    double composite_consistency = 0.0;  // 0.4*jaccard + 0.4*semantic + 0.2*structural
    double confidence = 0.0;             // exp(mean sequence log-probability)
    double uncertainty = 0.0;            // sample stddev of sequence log-probabilities
    double mean_logprob = 0.0;
};

// Mean over all unordered response pairs of |A∩B|/|A∪B| on token sets.
// A pair of empty token sets scores 1.
double jaccard_consistency(std::span<const std::string> responses);

// Mean pairwise TF-IDF cosine over the k responses, each response one
// document. TF = raw count, IDF = ln((1+k)/(1+df)) + 1, vectors
// L2-normalized; a zero vector gives cosine 0. Clamped to [0,1].
double semantic_consistency(std::span<const std::string> responses);

// Mean over pairs of 0.5*len_sim + 0.5*sent_sim, where each sim is
// 1 - |a-b|/max(a,b,1) on token and sentence counts respectively.
double structural_consistency(std::span<const std::string> responses);

double composite_consistency(double jaccard, double semantic, double structural);

// exp of the mean; inputs must be finite and <= 0.
double confidence_score(std::span<const double> sequence_logprobs);

// Sample standard deviation (k-1 denominator); needs k >= 2.
double uncertainty_score(std::span<const double> sequence_logprobs);

ProbeAssessment assess_probe(const ResponseSet& rs,
                             LogprobAggregation agg = LogprobAggregation::Mean);

struct AggregateMetrics {
    double mean_consistency = 0.0;
    double mean_confidence = 0.0;
    double mean_uncertainty = 0.0;
    double hcr = 0.0;  // fraction of probes with confidence >= tau_conf
    double lur = 0.0;  // fraction of probes with uncertainty <= tau_unc
    std::size_t n_probes = 0;
    double tau_conf = 0.0;
    double tau_unc = 0.0;
};

inline constexpr double kDefaultTauConf = 0.3;
inline constexpr double kDefaultTauUnc = 0.35;

AggregateMetrics aggregate(std::span<const ProbeAssessment> assessments,
                           double tau_conf = kDefaultTauConf, double tau_unc = kDefaultTauUnc);

}  // namespace microprobe
