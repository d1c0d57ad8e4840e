#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace diffusia::metrics {

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassificationReport {
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> auc;  // absent when labels are single-class
    ClassStats positive, negative;
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// macro-F1 = unweighted mean of per-class F1 (empty-prediction class -> F1 0);
// AUC by rank statistic with ties counted half.
ClassificationReport classification_metrics(const std::vector<double>& scores,
                                            const std::vector<int>& labels,
                                            double threshold = 0.5);

struct ScoredCandidate {
    std::string candidate_id;
    double score = 0.0;
    int relevant = 0;
};

struct RankingReport {
    std::map<size_t, double> map_at_k;
    std::map<size_t, double> hits_at_k;
    size_t cascades_scored = 0;
    size_t cascades_skipped = 0;  // no relevant candidate
};

// AP@k = sum_{i<=k} precision@i * rel_i / min(k, #relevant); MAP@k = mean over
// cascades; HITS@k = fraction of cascades with >=1 relevant in top k.
// Ties broken candidate-id ascending.
RankingReport ranking_metrics(const std::vector<std::vector<ScoredCandidate>>& cascades,
                              const std::vector<size_t>& ks);

// ratio_j = predicted_j / actual_j; nullopt where actual_j == 0.
std::vector<std::optional<double>> growth_ratio(const std::vector<double>& predicted,
                                                const std::vector<double>& actual);

}  // namespace diffusia::metrics
