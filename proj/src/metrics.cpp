#include "diffusia/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace diffusia::metrics {

ClassificationReport classification_metrics(const std::vector<double>& scores,
                                            const std::vector<int>& labels,
                                            double threshold) {
    if (scores.size() != labels.size())
        throw std::runtime_error("classification_metrics: length mismatch");
    if (scores.empty()) throw std::runtime_error("classification_metrics: empty input");

    ClassificationReport r;
    for (size_t i = 0; i < scores.size(); ++i) {
        bool pred = scores[i] >= threshold;
        bool truth = labels[i] != 0;
        if (pred && truth) ++r.tp;
        else if (pred && !truth) ++r.fp;
        else if (!pred && !truth) ++r.tn;
        else ++r.fn;
    }
    r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(scores.size());

    auto stats = [](size_t tp, size_t fp, size_t fn) {
        ClassStats s;
        s.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        s.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        return s;
    };
    r.positive = stats(r.tp, r.fp, r.fn);
    r.negative = stats(r.tn, r.fn, r.fp);
    r.macro_f1 = 0.5 * (r.positive.f1 + r.negative.f1);

    // AUC via the Mann-Whitney rank statistic, ties counted half
    size_t n_pos = r.tp + r.fn, n_neg = r.fp + r.tn;
    if (n_pos > 0 && n_neg > 0) {
        std::vector<size_t> order(scores.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return scores[a] < scores[b]; });
        double rank_sum_pos = 0.0;
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
            double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based mean rank
            for (size_t m = i; m < j; ++m)
                if (labels[order[m]] != 0) rank_sum_pos += avg_rank;
            i = j;
        }
        r.auc = (rank_sum_pos - 0.5 * n_pos * (n_pos + 1)) /
                (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    }
    return r;
}

RankingReport ranking_metrics(const std::vector<std::vector<ScoredCandidate>>& cascades,
                              const std::vector<size_t>& ks) {
    for (size_t k : ks)
        if (k == 0) throw std::runtime_error("ranking_metrics: k must be > 0");

    RankingReport report;
    std::map<size_t, double> ap_sum, hit_sum;
    for (size_t k : ks) {
        ap_sum[k] = 0.0;
        hit_sum[k] = 0.0;
    }
    for (const auto& cascade : cascades) {
        size_t n_rel = 0;
        for (const auto& c : cascade) n_rel += c.relevant != 0;
        if (n_rel == 0) {
            ++report.cascades_skipped;
            continue;
        }
        ++report.cascades_scored;
        std::vector<const ScoredCandidate*> ranked;
        ranked.reserve(cascade.size());
        for (const auto& c : cascade) ranked.push_back(&c);
        std::sort(ranked.begin(), ranked.end(),
                  [](const ScoredCandidate* a, const ScoredCandidate* b) {
                      if (a->score != b->score) return a->score > b->score;
                      return a->candidate_id < b->candidate_id;
                  });
        for (size_t k : ks) {
            size_t limit = std::min(k, ranked.size());
            size_t hits = 0;
            double ap = 0.0;
            for (size_t i = 0; i < limit; ++i) {
                if (ranked[i]->relevant) {
                    ++hits;
                    ap += static_cast<double>(hits) / static_cast<double>(i + 1);
                }
            }
            ap /= static_cast<double>(std::min(k, n_rel));
            ap_sum[k] += ap;
            hit_sum[k] += hits > 0 ? 1.0 : 0.0;
        }
    }
    for (size_t k : ks) {
        double denom = report.cascades_scored ? static_cast<double>(report.cascades_scored) : 1.0;
        report.map_at_k[k] = ap_sum[k] / denom;
        report.hits_at_k[k] = hit_sum[k] / denom;
    }
    return report;
}

std::vector<std::optional<double>> growth_ratio(const std::vector<double>& predicted,
                                                const std::vector<double>& actual) {
    if (predicted.size() != actual.size())
        throw std::runtime_error("growth_ratio: bin count mismatch");
    std::vector<std::optional<double>> out;
    out.reserve(predicted.size());
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (actual[i] == 0.0)
            out.emplace_back(std::nullopt);
        else
            out.emplace_back(predicted[i] / actual[i]);
    }
    return out;
}

}  // namespace diffusia::metrics
