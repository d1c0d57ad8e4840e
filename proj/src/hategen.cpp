#include "diffusia/hategen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

namespace diffusia::hategen {

size_t LabeledDataset::positives() const {
    size_t n = 0;
    for (int v : y) n += v != 0;
    return n;
}

namespace {

void split_indices(const LabeledDataset& ds, std::vector<size_t>& pos,
                   std::vector<size_t>& neg) {
    for (size_t i = 0; i < ds.y.size(); ++i) (ds.y[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw std::runtime_error("sampling requires both classes present");
}

LabeledDataset take_rows(const LabeledDataset& ds, const std::vector<size_t>& idx) {
    LabeledDataset out;
    out.X.reserve(idx.size());
    for (size_t i : idx) {
        out.X.push_back(ds.X[i]);
        out.y.push_back(ds.y[i]);
        out.meta.push_back(i < ds.meta.size() ? ds.meta[i] : RowMeta{});
    }
    return out;
}

}  // namespace

LabeledDataset downsample(const LabeledDataset& ds, uint64_t seed) {
    std::vector<size_t> pos, neg;
    split_indices(ds, pos, neg);
    if (neg.size() > pos.size()) {
        // Fisher-Yates prefix, without replacement
        Rng rng(seed ^ 0xd05a17ULL);
        for (size_t i = 0; i < pos.size(); ++i) {
            size_t j = i + rng.next_below(neg.size() - i);
            std::swap(neg[i], neg[j]);
        }
        neg.resize(pos.size());
    }
    std::vector<size_t> keep = pos;
    keep.insert(keep.end(), neg.begin(), neg.end());
    std::sort(keep.begin(), keep.end());
    return take_rows(ds, keep);
}

LabeledDataset upsample(const LabeledDataset& ds, uint64_t seed) {
    std::vector<size_t> pos, neg;
    split_indices(ds, pos, neg);
    std::vector<size_t> keep(ds.y.size());
    for (size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    Rng rng(seed ^ 0x0b5a17ULL);
    while (pos.size() + (keep.size() - ds.y.size()) < neg.size())
        keep.push_back(pos[rng.next_below(pos.size())]);
    return take_rows(ds, keep);
}

PCAModel pca_fit(const std::vector<std::vector<double>>& X, size_t k) {
    if (X.empty()) throw std::runtime_error("pca_fit: empty matrix");
    const size_t rows = X.size(), cols = X[0].size();
    if (k > std::min(rows, cols))
        throw std::runtime_error("pca_fit: k exceeds min(rows, cols)");

    Eigen::MatrixXd M(rows, cols);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) M(i, j) = X[i][j];
    Eigen::RowVectorXd mean = M.colwise().mean();
    M.rowwise() -= mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    PCAModel model;
    model.mean.assign(mean.data(), mean.data() + cols);
    for (size_t c = 0; c < k; ++c) {
        Eigen::VectorXd comp = svd.matrixV().col(c);
        // sign convention: largest-magnitude coordinate positive
        Eigen::Index imax = 0;
        comp.cwiseAbs().maxCoeff(&imax);
        if (comp(imax) < 0) comp = -comp;
        model.components.emplace_back(comp.data(), comp.data() + cols);
    }
    return model;
}

std::vector<std::vector<double>> pca_transform(const PCAModel& model,
                                               const std::vector<std::vector<double>>& X) {
    std::vector<std::vector<double>> out;
    out.reserve(X.size());
    for (const auto& row : X) {
        if (row.size() != model.mean.size())
            throw std::runtime_error("pca_transform: dimension mismatch");
        std::vector<double> proj(model.components.size(), 0.0);
        for (size_t c = 0; c < model.components.size(); ++c) {
            double s = 0.0;
            for (size_t j = 0; j < row.size(); ++j)
                s += (row[j] - model.mean[j]) * model.components[c][j];
            proj[c] = s;
        }
        out.push_back(std::move(proj));
    }
    return out;
}

double mi_column(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                 size_t col, size_t bins) {
    const size_t n = X.size();
    double lo = X[0][col], hi = X[0][col];
    for (const auto& row : X) {
        lo = std::min(lo, row[col]);
        hi = std::max(hi, row[col]);
    }
    if (hi <= lo) return 0.0;  // constant feature
    std::vector<std::vector<double>> joint(bins, std::vector<double>(2, 0.0));
    for (size_t i = 0; i < n; ++i) {
        size_t b = static_cast<size_t>((X[i][col] - lo) / (hi - lo) * bins);
        if (b >= bins) b = bins - 1;
        joint[b][y[i] ? 1 : 0] += 1.0;
    }
    double mi = 0.0;
    std::vector<double> pb(bins, 0.0), pc(2, 0.0);
    for (size_t b = 0; b < bins; ++b)
        for (size_t c = 0; c < 2; ++c) {
            joint[b][c] /= static_cast<double>(n);
            pb[b] += joint[b][c];
            pc[c] += joint[b][c];
        }
    for (size_t b = 0; b < bins; ++b)
        for (size_t c = 0; c < 2; ++c)
            if (joint[b][c] > 0.0)
                mi += joint[b][c] * std::log(joint[b][c] / (pb[b] * pc[c]));
    return mi;
}

std::vector<size_t> mi_topk(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y, size_t k, size_t bins) {
    if (X.empty()) throw std::runtime_error("mi_topk: empty matrix");
    const size_t cols = X[0].size();
    if (k > cols) throw std::runtime_error("mi_topk: k exceeds column count");
    std::vector<std::pair<double, size_t>> scored(cols);
    for (size_t c = 0; c < cols; ++c) scored[c] = {mi_column(X, y, c, bins), c};
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<size_t> out(k);
    for (size_t i = 0; i < k; ++i) out[i] = scored[i].second;
    return out;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const LabeledDataset& ds) {
    for (const auto& row : ds.X)
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("non-finite feature value");
}

struct TreeBuilder {
    const LabeledDataset& ds;
    std::vector<double> sample_weight;
    size_t max_depth;

    std::unique_ptr<TreeNode> build(const std::vector<size_t>& idx, size_t depth) {
        auto node = std::make_unique<TreeNode>();
        double wpos = 0.0, wtot = 0.0;
        size_t npos = 0;
        for (size_t i : idx) {
            wtot += sample_weight[i];
            if (ds.y[i]) {
                wpos += sample_weight[i];
                ++npos;
            }
        }
        node->prob = (static_cast<double>(npos) + 1.0) /
                     (static_cast<double>(idx.size()) + 2.0);  // Laplace
        bool pure = npos == 0 || npos == idx.size();
        if (depth >= max_depth || idx.size() < 2 || pure) return node;

        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        const double parent_gini = gini(wpos, wtot);
        const size_t cols = ds.cols();
        std::vector<size_t> sorted = idx;
        for (size_t f = 0; f < cols; ++f) {
            std::sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
                if (ds.X[a][f] != ds.X[b][f]) return ds.X[a][f] < ds.X[b][f];
                return a < b;
            });
            double lw = 0.0, lwpos = 0.0;
            for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                size_t a = sorted[i];
                lw += sample_weight[a];
                if (ds.y[a]) lwpos += sample_weight[a];
                double va = ds.X[a][f], vb = ds.X[sorted[i + 1]][f];
                if (va == vb) continue;
                double rw = wtot - lw, rwpos = wpos - lwpos;
                double gain = parent_gini - (lw / wtot) * gini(lwpos, lw) -
                              (rw / wtot) * gini(rwpos, rw);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (va + vb);
                }
            }
        }
        if (best_feature < 0) return node;
        std::vector<size_t> left, right;
        for (size_t i : idx)
            (ds.X[i][best_feature] <= best_threshold ? left : right).push_back(i);
        if (left.empty() || right.empty()) return node;
        node->feature = best_feature;
        node->threshold = best_threshold;
        node->left = build(left, depth + 1);
        node->right = build(right, depth + 1);
        return node;
    }

    static double gini(double wpos, double wtot) {
        if (wtot <= 0.0) return 0.0;
        double p = wpos / wtot;
        return 2.0 * p * (1.0 - p);
    }
};

}  // namespace

Classifier Classifier::train(ClassifierKind kind, const LabeledDataset& ds,
                             const TrainingConfig& cfg) {
    if (ds.rows() == 0 || ds.cols() == 0)
        throw std::runtime_error("train: empty dataset or empty feature space");
    size_t npos = ds.positives();
    if (npos == 0 || npos == ds.rows())
        throw std::runtime_error("train: both classes required");
    check_finite(ds);

    Classifier clf;
    clf.kind_ = kind;
    clf.cfg_ = cfg;
    clf.input_dim_ = ds.cols();
    const size_t n = ds.rows(), d = ds.cols();

    // class-balanced weights: n / (2 * class count)
    std::vector<double> sw(n, 1.0);
    if (cfg.class_balanced) {
        double wp = static_cast<double>(n) / (2.0 * static_cast<double>(npos));
        double wn = static_cast<double>(n) / (2.0 * static_cast<double>(n - npos));
        for (size_t i = 0; i < n; ++i) sw[i] = ds.y[i] ? wp : wn;
    }

    if (kind == ClassifierKind::decision_tree) {
        TreeBuilder builder{ds, sw, cfg.max_depth};
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        clf.root_ = builder.build(idx, 0);
        return clf;
    }

    // logistic regression: full-batch gradient descent with halving on
    // loss increase, which keeps the trace monotone
    clf.weights_.assign(d, 0.0);
    clf.bias_ = 0.0;
    double wsum = 0.0;
    for (double w : sw) wsum += w;
    auto loss_of = [&](const std::vector<double>& w, double b) {
        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = b;
            for (size_t j = 0; j < d; ++j) z += w[j] * ds.X[i][j];
            double p = sigmoid(z);
            p = std::clamp(p, 1e-12, 1.0 - 1e-12);
            loss -= sw[i] * (ds.y[i] ? std::log(p) : std::log(1.0 - p));
        }
        loss /= wsum;
        for (double wj : w) loss += 0.5 * cfg.l2 * wj * wj;
        return loss;
    };
    double lr = cfg.learning_rate;
    double prev_loss = loss_of(clf.weights_, clf.bias_);
    clf.loss_trace_.push_back(prev_loss);
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<double> grad(d, 0.0);
        double grad_b = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double z = clf.bias_;
            for (size_t j = 0; j < d; ++j) z += clf.weights_[j] * ds.X[i][j];
            double err = sw[i] * (sigmoid(z) - (ds.y[i] ? 1.0 : 0.0));
            for (size_t j = 0; j < d; ++j) grad[j] += err * ds.X[i][j];
            grad_b += err;
        }
        for (size_t j = 0; j < d; ++j)
            grad[j] = grad[j] / wsum + cfg.l2 * clf.weights_[j];
        grad_b /= wsum;

        while (true) {
            std::vector<double> w_try = clf.weights_;
            for (size_t j = 0; j < d; ++j) w_try[j] -= lr * grad[j];
            double b_try = clf.bias_ - lr * grad_b;
            double l_try = loss_of(w_try, b_try);
            if (l_try <= prev_loss + 1e-15 || lr < 1e-12) {
                clf.weights_ = std::move(w_try);
                clf.bias_ = b_try;
                prev_loss = std::min(prev_loss, l_try);
                break;
            }
            lr *= 0.5;
        }
        clf.loss_trace_.push_back(prev_loss);
        if (clf.loss_trace_.size() >= 2) {
            double delta = clf.loss_trace_[clf.loss_trace_.size() - 2] - prev_loss;
            if (delta >= 0.0 && delta < cfg.tolerance) break;
        }
    }
    return clf;
}

double Classifier::predict_proba(const std::vector<double>& x) const {
    if (x.size() != input_dim_)
        throw std::runtime_error("predict_proba: dimension mismatch");
    if (kind_ == ClassifierKind::logistic_regression) {
        double z = bias_;
        for (size_t j = 0; j < x.size(); ++j) z += weights_[j] * x[j];
        return std::clamp(sigmoid(z), 1e-12, 1.0 - 1e-12);
    }
    const TreeNode* node = root_.get();
    while (node->feature >= 0)
        node = x[node->feature] <= node->threshold ? node->left.get() : node->right.get();
    return node->prob;
}

namespace {

json tree_to_json(const TreeNode* node) {
    json obj;
    obj["feature"] = node->feature;
    obj["threshold"] = node->threshold;
    obj["prob"] = node->prob;
    if (node->left) {
        obj["left"] = tree_to_json(node->left.get());
        obj["right"] = tree_to_json(node->right.get());
    }
    return obj;
}

std::unique_ptr<TreeNode> tree_from_json(const json& obj) {
    auto node = std::make_unique<TreeNode>();
    node->feature = obj["feature"].get<int>();
    node->threshold = obj["threshold"].get<double>();
    node->prob = obj["prob"].get<double>();
    if (obj.contains("left")) {
        node->left = tree_from_json(obj["left"]);
        node->right = tree_from_json(obj["right"]);
    }
    return node;
}

}  // namespace

void Classifier::save(const std::filesystem::path& path) const {
    json obj;
    obj["format"] = "diffusia-clf-v1";
    obj["kind"] = kind_ == ClassifierKind::logistic_regression ? "logistic_regression"
                                                               : "decision_tree";
    obj["input_dim"] = input_dim_;
    if (kind_ == ClassifierKind::logistic_regression) {
        obj["weights"] = weights_;
        obj["bias"] = bias_;
    } else {
        obj["tree"] = tree_to_json(root_.get());
    }
    obj["config"] = {{"seed", cfg_.seed},
                     {"class_balanced", cfg_.class_balanced},
                     {"max_depth", cfg_.max_depth},
                     {"learning_rate", cfg_.learning_rate},
                     {"epochs", cfg_.epochs},
                     {"l2", cfg_.l2}};
    write_file(path, obj.dump() + "\n");
}

Classifier Classifier::load(const std::filesystem::path& path) {
    json obj = json::parse(read_file(path));
    if (obj.value("format", "") != "diffusia-clf-v1")
        throw std::runtime_error("not a diffusia-clf-v1 container: " + path.string());
    Classifier clf;
    clf.kind_ = obj["kind"] == "logistic_regression" ? ClassifierKind::logistic_regression
                                                     : ClassifierKind::decision_tree;
    clf.input_dim_ = obj["input_dim"].get<size_t>();
    if (clf.kind_ == ClassifierKind::logistic_regression) {
        clf.weights_ = obj["weights"].get<std::vector<double>>();
        clf.bias_ = obj["bias"].get<double>();
    } else {
        clf.root_ = tree_from_json(obj["tree"]);
    }
    return clf;
}

}  // namespace diffusia::hategen
