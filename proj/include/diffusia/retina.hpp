#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace diffusia::retina {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- attention primitives ----

struct AttentionParams {
    MatrixXd W_Q;  // dim_tweet x hdim
    MatrixXd W_K;  // dim_news x hdim
    MatrixXd W_V;  // dim_news x hdim
};

struct QKV {
    VectorXd Q;   // hdim
    MatrixXd K;   // k x hdim
    MatrixXd V;   // k x hdim
};

QKV qkv(const VectorXd& x_tweet, const MatrixXd& x_news, const AttentionParams& p);

// softmax((Q . K_i) * hdim^-0.5); scaling applied to the logits
VectorXd attention_weights(const VectorXd& Q, const MatrixXd& K);

// sum_i A_i V_i
VectorXd attend(const MatrixXd& V, const VectorXd& A);

// ---- weighted BCE loss ----

// w = lambda * ln(C / C_pos); throws when C_pos == 0
double class_weight(size_t total, size_t positives, double lambda);

// -w * t * ln p - (1 - t) * ln(1 - p), p clamped to [1e-7, 1 - 1e-7]
double weighted_bce(double p, int target, double w);

// ---- model ----

enum class Mode { static_head, dynamic_head };
enum class Optimizer { sgd, adam };

struct TrainConfig {
    size_t batch_size = 16;      // 32 for dynamic
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-3;  // sgd best: 1e-2
    double lambda = 2.0;          // 2.5 for dynamic
    size_t epochs = 10;
    uint64_t seed = 0;
    size_t n_intervals = 8;       // dynamic mode
};

struct Sample {
    VectorXd x_user;
    VectorXd x_tweet;
    MatrixXd x_news;  // k x dim_news (k may be 0)
    int label = 0;                    // static target
    std::vector<int> labels_per_bin;  // dynamic targets
    std::string candidate_id;
    std::string tweet_id;
};

struct Tensor {
    std::string name;
    MatrixXd value;
    MatrixXd grad;
    // Adam state
    MatrixXd m, v;
};

class RetinaModel {
public:
    static RetinaModel init(Mode mode, size_t dim_user, size_t dim_tweet, size_t dim_news,
                            size_t hdim, uint64_t seed, bool use_attention = true);

    Mode mode() const { return mode_; }
    size_t hdim() const { return hdim_; }
    bool use_attention() const { return use_attention_; }
    size_t parameter_count() const;

    double static_forward(const Sample& s) const;
    std::vector<double> dynamic_forward(const Sample& s, size_t n_intervals) const;

    struct TrainResult {
        std::vector<double> loss_per_epoch;
        double pos_weight = 1.0;
    };
    TrainResult train(const std::vector<Sample>& data, const TrainConfig& cfg);

    // max relative error between analytic and central finite differences
    double grad_check(const Sample& s, double pos_weight, size_t n_intervals,
                      double eps = 1e-5);

    void save(const std::filesystem::path& path) const;  // diffusia-retina-v1
    static RetinaModel load(const std::filesystem::path& path);

    std::vector<Tensor>& tensors() { return tensors_; }

private:
    // forward with cache + backward accumulating into tensor grads;
    // returns the sample loss
    double forward_backward(const Sample& s, double pos_weight, size_t n_intervals);

    Tensor& tensor(const std::string& name);
    const Tensor& tensor(const std::string& name) const;

    Mode mode_ = Mode::static_head;
    bool use_attention_ = true;
    size_t dim_user_ = 0, dim_tweet_ = 0, dim_news_ = 0, hdim_ = 0;
    std::vector<Tensor> tensors_;
};

struct ScoredCandidate {
    std::string candidate_id;
    double score = 0.0;                // static
    std::vector<double> scores;        // dynamic
};

// sorted by score descending, candidate id ascending on ties (dynamic: mean score)
std::vector<ScoredCandidate> predict_retweeters(const RetinaModel& model,
                                                const std::vector<Sample>& candidates,
                                                size_t n_intervals = 0);

}  // namespace diffusia::retina
