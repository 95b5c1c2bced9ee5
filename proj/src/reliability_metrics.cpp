#include "microprobe/reliability_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "microprobe/text.hpp"

namespace microprobe {

namespace {

template <typename PairFn>
double mean_over_pairs(std::size_t k, PairFn&& fn) {
    if (k < 2) throw std::invalid_argument("pairwise metric needs at least 2 responses");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            sum += fn(i, j);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace

double jaccard_consistency(std::span<const std::string> responses) {
    std::vector<std::set<std::string>> sets;
    sets.reserve(responses.size());
    for (const auto& r : responses) sets.push_back(token_set(r));
    return mean_over_pairs(sets.size(),
                           [&](std::size_t i, std::size_t j) { return jaccard_similarity(sets[i], sets[j]); });
}

double semantic_consistency(std::span<const std::string> responses) {
    const std::size_t k = responses.size();
    if (k < 2) throw std::invalid_argument("semantic consistency needs at least 2 responses");

    std::vector<std::vector<std::string>> docs;
    docs.reserve(k);
    for (const auto& r : responses) docs.push_back(tokenize(r));

    // Document frequency per term across the k responses.
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string> seen(doc.begin(), doc.end());
        for (const auto& t : seen) ++df[t];
    }

    std::map<std::string, double> idf;
    for (const auto& [term, count] : df) {
        idf[term] = std::log((1.0 + static_cast<double>(k)) / (1.0 + static_cast<double>(count))) + 1.0;
    }

    // L2-normalized tf-idf vectors, kept sparse.
    std::vector<std::map<std::string, double>> vecs(k);
    for (std::size_t d = 0; d < k; ++d) {
        std::map<std::string, std::size_t> tf;
        for (const auto& t : docs[d]) ++tf[t];
        double norm_sq = 0.0;
        for (const auto& [term, count] : tf) {
            const double w = static_cast<double>(count) * idf[term];
            vecs[d][term] = w;
            norm_sq += w * w;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& [term, w] : vecs[d]) w *= inv;
        }
    }

    return mean_over_pairs(k, [&](std::size_t i, std::size_t j) {
        const auto& a = vecs[i];
        const auto& b = vecs[j];
        if (a.empty() || b.empty()) return 0.0;
        double dot = 0.0;
        for (const auto& [term, w] : a) {
            auto it = b.find(term);
            if (it != b.end()) dot += w * it->second;
        }
        return std::clamp(dot, 0.0, 1.0);
    });
}

double structural_consistency(std::span<const std::string> responses) {
    const std::size_t k = responses.size();
    std::vector<double> lens(k);
    std::vector<double> sents(k);
    for (std::size_t i = 0; i < k; ++i) {
        lens[i] = static_cast<double>(whitespace_token_count(responses[i]));
        sents[i] = static_cast<double>(sentence_count(responses[i]));
    }
    auto sim = [](double a, double b) {
        const double denom = std::max({a, b, 1.0});
        return 1.0 - std::abs(a - b) / denom;
    };
    return mean_over_pairs(k, [&](std::size_t i, std::size_t j) {
        return 0.5 * sim(lens[i], lens[j]) + 0.5 * sim(sents[i], sents[j]);
    });
}

double composite_consistency(double jaccard, double semantic, double structural) {
    for (double v : {jaccard, semantic, structural}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("consistency components must be in [0,1]");
        }
    }
    return 0.4 * jaccard + 0.4 * semantic + 0.2 * structural;
}

double confidence_score(std::span<const double> sequence_logprobs) {
    if (sequence_logprobs.empty()) throw std::invalid_argument("confidence needs at least 1 logprob");
    double sum = 0.0;
    for (double lp : sequence_logprobs) {
        if (!std::isfinite(lp) || lp > 0.0) throw std::invalid_argument("sequence logprobs must be finite and <= 0");
        sum += lp;
    }
    return std::exp(sum / static_cast<double>(sequence_logprobs.size()));
}

double uncertainty_score(std::span<const double> sequence_logprobs) {
    const std::size_t k = sequence_logprobs.size();
    if (k < 2) throw std::invalid_argument("uncertainty needs at least 2 logprobs");
    double mean = 0.0;
    for (double lp : sequence_logprobs) mean += lp;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double lp : sequence_logprobs) {
        const double d = lp - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(k - 1));
}

ProbeAssessment assess_probe(const ResponseSet& rs, LogprobAggregation agg) {
    rs.validate();
    std::vector<std::string> texts;
    std::vector<double> seq_lps;
    texts.reserve(rs.responses.size());
    seq_lps.reserve(rs.responses.size());
    for (const auto& resp : rs.responses) {
        texts.push_back(resp.text);
        seq_lps.push_back(resp.sequence_logprob(agg));
    }

    ProbeAssessment a;
    a.probe_id = rs.probe_id;
    a.jaccard = jaccard_consistency(texts);
    a.semantic = semantic_consistency(texts);
    a.structural = structural_consistency(texts);
    a.composite_consistency = composite_consistency(a.jaccard, a.semantic, a.structural);
    a.confidence = confidence_score(seq_lps);
    a.uncertainty = uncertainty_score(seq_lps);
    double sum = 0.0;
    for (double lp : seq_lps) sum += lp;
    a.mean_logprob = sum / static_cast<double>(seq_lps.size());
    return a;
}

AggregateMetrics aggregate(std::span<const ProbeAssessment> assessments, double tau_conf,
                           double tau_unc) {
    if (assessments.empty()) throw std::invalid_argument("aggregate needs at least one assessment");
    AggregateMetrics agg;
    agg.n_probes = assessments.size();
    agg.tau_conf = tau_conf;
    agg.tau_unc = tau_unc;
    std::size_t high_conf = 0;
    std::size_t low_unc = 0;
    for (const auto& a : assessments) {
        agg.mean_consistency += a.composite_consistency;
        agg.mean_confidence += a.confidence;
        agg.mean_uncertainty += a.uncertainty;
        if (a.confidence >= tau_conf) ++high_conf;
        if (a.uncertainty <= tau_unc) ++low_unc;
    }
    const double n = static_cast<double>(agg.n_probes);
    agg.mean_consistency /= n;
    agg.mean_confidence /= n;
    agg.mean_uncertainty /= n;
    agg.hcr = static_cast<double>(high_conf) / n;
    agg.lur = static_cast<double>(low_unc) / n;
    return agg;
}

}  // namespace microprobe
