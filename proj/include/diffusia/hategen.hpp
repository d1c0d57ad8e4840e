#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace diffusia::hategen {

struct RowMeta {
    std::string user_id;
    std::string hashtag;
    int64_t t = 0;
};

struct LabeledDataset {
    std::vector<std::vector<double>> X;
    std::vector<int> y;  // 1 = posted hateful tweet for that hashtag
    std::vector<RowMeta> meta;

    size_t rows() const { return X.size(); }
    size_t cols() const { return X.empty() ? 0 : X[0].size(); }
    size_t positives() const;
};

// negatives subsampled without replacement to 1:1; rows preserved bitwise
LabeledDataset downsample(const LabeledDataset& ds, uint64_t seed);
// positives duplicated with replacement to 1:1
LabeledDataset upsample(const LabeledDataset& ds, uint64_t seed);

struct PCAModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // k rows, each of input dim
};

// mean-centered projection onto top-k principal directions; each component's
// largest-magnitude coordinate made positive
PCAModel pca_fit(const std::vector<std::vector<double>>& X, size_t k);
std::vector<std::vector<double>> pca_transform(const PCAModel& model,
                                               const std::vector<std::vector<double>>& X);

// columns ranked by plug-in MI(feature; y) with equal-width binning; ties by
// lower column index
std::vector<size_t> mi_topk(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y, size_t k, size_t bins = 10);
double mi_column(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                 size_t col, size_t bins = 10);

enum class ClassifierKind { logistic_regression, decision_tree };

struct TrainingConfig {
    uint64_t seed = 0;
    bool class_balanced = true;
    size_t max_depth = 5;        // decision tree
    double learning_rate = 0.1;  // logistic
    size_t epochs = 500;
    double l2 = 1e-4;
    double tolerance = 1e-8;
};

struct TreeNode {
    int feature = -1;       // -1: leaf
    double threshold = 0.0;
    double prob = 0.5;      // leaf probability (Laplace-smoothed)
    std::unique_ptr<TreeNode> left, right;  // left: x[feature] <= threshold
};

class Classifier {
public:
    static Classifier train(ClassifierKind kind, const LabeledDataset& ds,
                            const TrainingConfig& cfg);
    double predict_proba(const std::vector<double>& x) const;  // in (0,1)
    ClassifierKind kind() const { return kind_; }
    const std::vector<double>& loss_trace() const { return loss_trace_; }

    void save(const std::filesystem::path& path) const;  // diffusia-clf-v1
    static Classifier load(const std::filesystem::path& path);

private:
    ClassifierKind kind_ = ClassifierKind::logistic_regression;
    size_t input_dim_ = 0;
    // logistic
    std::vector<double> weights_;
    double bias_ = 0.0;
    std::vector<double> loss_trace_;
    // tree
    std::unique_ptr<TreeNode> root_;
    TrainingConfig cfg_;
};

}  // namespace diffusia::hategen
