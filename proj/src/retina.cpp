#include "diffusia/retina.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

namespace diffusia::retina {

QKV qkv(const VectorXd& x_tweet, const MatrixXd& x_news, const AttentionParams& p) {
    if (x_tweet.size() != p.W_Q.rows() ||
        (x_news.rows() > 0 && x_news.cols() != p.W_K.rows()))
        throw std::runtime_error("qkv: shape mismatch");
    QKV out;
    out.Q = p.W_Q.transpose() * x_tweet;
    out.K = x_news * p.W_K;
    out.V = x_news * p.W_V;
    return out;
}

VectorXd attention_weights(const VectorXd& Q, const MatrixXd& K) {
    if (K.rows() == 0) throw std::runtime_error("attention_weights: empty news sequence");
    if (K.cols() != Q.size()) throw std::runtime_error("attention_weights: shape mismatch");
    VectorXd logits = (K * Q) / std::sqrt(static_cast<double>(Q.size()));
    double mx = logits.maxCoeff();
    VectorXd e = (logits.array() - mx).exp();
    return e / e.sum();
}

VectorXd attend(const MatrixXd& V, const VectorXd& A) {
    if (V.rows() != A.size()) throw std::runtime_error("attend: length mismatch");
    return V.transpose() * A;
}

double class_weight(size_t total, size_t positives, double lambda) {
    if (positives == 0) throw std::runtime_error("class_weight: zero positive count");
    if (total < positives) throw std::runtime_error("class_weight: total < positives");
    return lambda * std::log(static_cast<double>(total) / static_cast<double>(positives));
}

double weighted_bce(double p, int target, double w) {
    p = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return target ? -w * std::log(p) : -std::log(1.0 - p);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd l2_normalize(const VectorXd& v) {
    double n = v.norm();
    return n > 0.0 ? VectorXd(v / n) : v;
}

MatrixXd glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = (2.0 * rng.next_double() - 1.0) * bound;
    return m;
}

// d loss / d logit of the (possibly weighted) BCE
double bce_dlogit(double p, int target, double w) {
    return target ? -w * (1.0 - p) : p;
}

}  // namespace

Tensor& RetinaModel::tensor(const std::string& name) {
    for (auto& t : tensors_)
        if (t.name == name) return t;
    throw std::runtime_error("unknown tensor " + name);
}

const Tensor& RetinaModel::tensor(const std::string& name) const {
    for (const auto& t : tensors_)
        if (t.name == name) return t;
    throw std::runtime_error("unknown tensor " + name);
}

RetinaModel RetinaModel::init(Mode mode, size_t dim_user, size_t dim_tweet, size_t dim_news,
                              size_t hdim, uint64_t seed, bool use_attention) {
    RetinaModel m;
    m.mode_ = mode;
    m.use_attention_ = use_attention;
    m.dim_user_ = dim_user;
    m.dim_tweet_ = dim_tweet;
    m.dim_news_ = dim_news;
    m.hdim_ = hdim;
    Rng rng(seed ^ 0x7e71a0ULL);
    const auto h = static_cast<Eigen::Index>(hdim);
    auto add = [&m](const std::string& name, MatrixXd value) {
        Tensor t;
        t.name = name;
        t.grad = MatrixXd::Zero(value.rows(), value.cols());
        t.m = t.grad;
        t.v = t.grad;
        t.value = std::move(value);
        m.tensors_.push_back(std::move(t));
    };
    add("W_Q", glorot(rng, static_cast<Eigen::Index>(dim_tweet), h));
    add("W_K", glorot(rng, static_cast<Eigen::Index>(dim_news), h));
    add("W_V", glorot(rng, static_cast<Eigen::Index>(dim_news), h));
    add("W1", glorot(rng, h, static_cast<Eigen::Index>(dim_user)));
    add("b1", MatrixXd::Zero(h, 1));
    if (mode == Mode::static_head) {
        add("w2", glorot(rng, 1, 2 * h));
        add("b2", MatrixXd::Zero(1, 1));
    } else {
        add("Wz", glorot(rng, h, 2 * h));
        add("Wr", glorot(rng, h, 2 * h));
        add("Wh", glorot(rng, h, 2 * h));
        add("Uz", glorot(rng, h, h));
        add("Ur", glorot(rng, h, h));
        add("Uh", glorot(rng, h, h));
        add("bz", MatrixXd::Zero(h, 1));
        add("br", MatrixXd::Zero(h, 1));
        add("bh", MatrixXd::Zero(h, 1));
        add("w_out", glorot(rng, 1, h));
        add("b_out", MatrixXd::Zero(1, 1));
    }
    return m;
}

size_t RetinaModel::parameter_count() const {
    size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<size_t>(t.value.size());
    return n;
}

namespace {

// shared encoder state for forward/backward
struct EncoderCache {
    VectorXd xu_n;       // normalized user features
    VectorXd h1_pre, h1; // feed-forward layer
    QKV att;
    VectorXd A;
    VectorXd xtn;
    VectorXd z;          // [h1 ; xtn]
};

}  // namespace

// encoder shared by both heads
static EncoderCache encode(const Sample& s,
                           const MatrixXd& W_Q, const MatrixXd& W_K, const MatrixXd& W_V,
                           const MatrixXd& W1, const VectorXd& b1, size_t hdim,
                           bool use_attention) {
    EncoderCache c;
    c.xu_n = l2_normalize(s.x_user);
    c.h1_pre = W1 * c.xu_n + b1;
    c.h1 = c.h1_pre.cwiseMax(0.0);
    c.xtn = VectorXd::Zero(static_cast<Eigen::Index>(hdim));
    if (use_attention && s.x_news.rows() > 0) {
        c.att = qkv(s.x_tweet, s.x_news, AttentionParams{W_Q, W_K, W_V});
        c.A = attention_weights(c.att.Q, c.att.K);
        c.xtn = attend(c.att.V, c.A);
    }
    c.z.resize(c.h1.size() + c.xtn.size());
    c.z << c.h1, c.xtn;
    return c;
}

double RetinaModel::static_forward(const Sample& s) const {
    if (mode_ != Mode::static_head) throw std::runtime_error("model is not in static mode");
    EncoderCache c = encode(s, tensor("W_Q").value, tensor("W_K").value,
                            tensor("W_V").value, tensor("W1").value,
                            tensor("b1").value.col(0), hdim_, use_attention_);
    double logit = (tensor("w2").value * c.z)(0, 0) + tensor("b2").value(0, 0);
    return sigmoid(logit);
}

std::vector<double> RetinaModel::dynamic_forward(const Sample& s, size_t n_intervals) const {
    if (mode_ != Mode::dynamic_head) throw std::runtime_error("model is not in dynamic mode");
    if (n_intervals < 1) throw std::runtime_error("dynamic_forward: n_intervals must be >= 1");
    EncoderCache c = encode(s, tensor("W_Q").value, tensor("W_K").value,
                            tensor("W_V").value, tensor("W1").value,
                            tensor("b1").value.col(0), hdim_, use_attention_);
    const MatrixXd& Wz = tensor("Wz").value;
    const MatrixXd& Wr = tensor("Wr").value;
    const MatrixXd& Wh = tensor("Wh").value;
    const MatrixXd& Uz = tensor("Uz").value;
    const MatrixXd& Ur = tensor("Ur").value;
    const MatrixXd& Uh = tensor("Uh").value;
    const VectorXd bz = tensor("bz").value.col(0);
    const VectorXd br = tensor("br").value.col(0);
    const VectorXd bh = tensor("bh").value.col(0);
    const MatrixXd& w_out = tensor("w_out").value;
    double b_out = tensor("b_out").value(0, 0);

    VectorXd h = VectorXd::Zero(static_cast<Eigen::Index>(hdim_));
    std::vector<double> out;
    out.reserve(n_intervals);
    for (size_t t = 0; t < n_intervals; ++t) {
        VectorXd zg = ((Wz * c.z + Uz * h + bz).array().logistic()).matrix();
        VectorXd rg = ((Wr * c.z + Ur * h + br).array().logistic()).matrix();
        VectorXd cand = ((Wh * c.z + Uh * (rg.cwiseProduct(h)) + bh).array().tanh()).matrix();
        h = (VectorXd::Ones(h.size()) - zg).cwiseProduct(h) + zg.cwiseProduct(cand);
        out.push_back(sigmoid((w_out * h)(0, 0) + b_out));
    }
    return out;
}

double RetinaModel::forward_backward(const Sample& s, double pos_weight,
                                     size_t n_intervals) {
    Tensor& tWQ = tensor("W_Q");
    Tensor& tWK = tensor("W_K");
    Tensor& tWV = tensor("W_V");
    Tensor& tW1 = tensor("W1");
    Tensor& tb1 = tensor("b1");
    EncoderCache c = encode(s, tWQ.value, tWK.value, tWV.value, tW1.value,
                            tb1.value.col(0), hdim_, use_attention_);
    const auto h = static_cast<Eigen::Index>(hdim_);
    double loss = 0.0;
    VectorXd dz = VectorXd::Zero(2 * h);

    if (mode_ == Mode::static_head) {
        Tensor& tw2 = tensor("w2");
        Tensor& tb2 = tensor("b2");
        double logit = (tw2.value * c.z)(0, 0) + tb2.value(0, 0);
        double p = sigmoid(logit);
        loss = weighted_bce(p, s.label, pos_weight);
        double dlogit = bce_dlogit(p, s.label, pos_weight);
        tw2.grad += dlogit * c.z.transpose();
        tb2.grad(0, 0) += dlogit;
        dz = tw2.value.transpose() * dlogit;
    } else {
        Tensor& tWz = tensor("Wz");
        Tensor& tWr = tensor("Wr");
        Tensor& tWh = tensor("Wh");
        Tensor& tUz = tensor("Uz");
        Tensor& tUr = tensor("Ur");
        Tensor& tUh = tensor("Uh");
        Tensor& tbz = tensor("bz");
        Tensor& tbr = tensor("br");
        Tensor& tbh = tensor("bh");
        Tensor& two = tensor("w_out");
        Tensor& tbo = tensor("b_out");
        const size_t n = n_intervals;

        std::vector<VectorXd> hs(n + 1), zgs(n), rgs(n), cands(n);
        std::vector<double> ps(n);
        hs[0] = VectorXd::Zero(h);
        for (size_t t = 0; t < n; ++t) {
            zgs[t] = ((tWz.value * c.z + tUz.value * hs[t] + tbz.value.col(0))
                          .array().logistic()).matrix();
            rgs[t] = ((tWr.value * c.z + tUr.value * hs[t] + tbr.value.col(0))
                          .array().logistic()).matrix();
            cands[t] = ((tWh.value * c.z + tUh.value * (rgs[t].cwiseProduct(hs[t])) +
                         tbh.value.col(0)).array().tanh()).matrix();
            hs[t + 1] = (VectorXd::Ones(h) - zgs[t]).cwiseProduct(hs[t]) +
                        zgs[t].cwiseProduct(cands[t]);
            ps[t] = sigmoid((two.value * hs[t + 1])(0, 0) + tbo.value(0, 0));
            int target = t < s.labels_per_bin.size() ? s.labels_per_bin[t] : 0;
            loss += weighted_bce(ps[t], target, pos_weight);
        }
        loss /= static_cast<double>(n);

        VectorXd dh = VectorXd::Zero(h);
        for (size_t ti = n; ti-- > 0;) {
            int target = ti < s.labels_per_bin.size() ? s.labels_per_bin[ti] : 0;
            double dlogit = bce_dlogit(ps[ti], target, pos_weight) / static_cast<double>(n);
            two.grad += dlogit * hs[ti + 1].transpose();
            tbo.grad(0, 0) += dlogit;
            dh += two.value.transpose() * dlogit;

            VectorXd dzg = dh.cwiseProduct(cands[ti] - hs[ti]);
            VectorXd dcand = dh.cwiseProduct(zgs[ti]);
            VectorXd dh_prev = dh.cwiseProduct(VectorXd::Ones(h) - zgs[ti]);

            VectorXd dac = dcand.cwiseProduct(
                (VectorXd::Ones(h) - cands[ti].cwiseProduct(cands[ti])));
            tWh.grad += dac * c.z.transpose();
            tbh.grad.col(0) += dac;
            tUh.grad += dac * (rgs[ti].cwiseProduct(hs[ti])).transpose();
            VectorXd drh = tUh.value.transpose() * dac;
            VectorXd drg = drh.cwiseProduct(hs[ti]);
            dh_prev += drh.cwiseProduct(rgs[ti]);

            VectorXd dar = drg.cwiseProduct(
                rgs[ti].cwiseProduct(VectorXd::Ones(h) - rgs[ti]));
            tWr.grad += dar * c.z.transpose();
            tbr.grad.col(0) += dar;
            tUr.grad += dar * hs[ti].transpose();
            dh_prev += tUr.value.transpose() * dar;

            VectorXd daz = dzg.cwiseProduct(
                zgs[ti].cwiseProduct(VectorXd::Ones(h) - zgs[ti]));
            tWz.grad += daz * c.z.transpose();
            tbz.grad.col(0) += daz;
            tUz.grad += daz * hs[ti].transpose();
            dh_prev += tUz.value.transpose() * daz;

            dz += tWz.value.transpose() * daz + tWr.value.transpose() * dar +
                  tWh.value.transpose() * dac;
            dh = dh_prev;
        }
    }

    // encoder backward
    VectorXd dh1 = dz.head(h);
    VectorXd dxtn = dz.tail(h);
    VectorXd dh1_pre =
        dh1.cwiseProduct((c.h1_pre.array() > 0.0).cast<double>().matrix());
    tW1.grad += dh1_pre * c.xu_n.transpose();
    tb1.grad.col(0) += dh1_pre;

    if (use_attention_ && s.x_news.rows() > 0) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(hdim_));
        MatrixXd dV = c.A * dxtn.transpose();      // k x hdim
        VectorXd dA = c.att.V * dxtn;              // k
        double a_dot = c.A.dot(dA);
        VectorXd dlogits = c.A.cwiseProduct(dA -
                                            VectorXd::Constant(c.A.size(), a_dot));
        VectorXd dQ = c.att.K.transpose() * dlogits * scale;
        MatrixXd dK = dlogits * c.att.Q.transpose() * scale;  // k x hdim
        tWQ.grad += s.x_tweet * dQ.transpose();
        tWK.grad += s.x_news.transpose() * dK;
        tWV.grad += s.x_news.transpose() * dV;
    }
    return loss;
}

RetinaModel::TrainResult RetinaModel::train(const std::vector<Sample>& data,
                                            const TrainConfig& cfg) {
    if (data.empty()) throw std::runtime_error("train: empty dataset");
    if (cfg.batch_size < 1) throw std::runtime_error("train: batch_size must be >= 1");
    size_t total = 0, positives = 0;
    if (mode_ == Mode::static_head) {
        total = data.size();
        for (const auto& s : data) positives += s.label != 0;
    } else {
        for (const auto& s : data) {
            if (s.labels_per_bin.size() != cfg.n_intervals)
                throw std::runtime_error("train: per-interval labels missing");
            total += s.labels_per_bin.size();
            for (int l : s.labels_per_bin) positives += l != 0;
        }
    }
    TrainResult result;
    result.pos_weight =
        cfg.lambda == 0.0 ? 0.0 : class_weight(total, std::max<size_t>(positives, 1), cfg.lambda);

    Rng shuffle_rng(cfg.seed ^ 0x5aff1eULL);
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double b1c = 0.9, b2c = 0.999, eps = 1e-8;
    size_t adam_t = 0;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            size_t j = i + shuffle_rng.next_below(order.size() - i);
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& t : tensors_) t.grad.setZero();
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i)
                batch_loss +=
                    forward_backward(data[order[i]], result.pos_weight, cfg.n_intervals);
            double inv = 1.0 / static_cast<double>(end - start);
            batch_loss *= inv;
            epoch_loss += batch_loss * static_cast<double>(end - start);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss diverged (NaN/Inf) at epoch " +
                                         std::to_string(epoch));
            if (cfg.optimizer == Optimizer::sgd) {
                for (auto& t : tensors_) t.value -= cfg.learning_rate * inv * t.grad;
            } else {
                ++adam_t;
                double corr1 = 1.0 - std::pow(b1c, static_cast<double>(adam_t));
                double corr2 = 1.0 - std::pow(b2c, static_cast<double>(adam_t));
                for (auto& t : tensors_) {
                    MatrixXd g = inv * t.grad;
                    t.m = b1c * t.m + (1.0 - b1c) * g;
                    t.v = b2c * t.v + (1.0 - b2c) * g.cwiseProduct(g);
                    MatrixXd mhat = t.m / corr1;
                    MatrixXd vhat = t.v / corr2;
                    t.value -= cfg.learning_rate *
                               (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
                }
            }
        }
        result.loss_per_epoch.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return result;
}

double RetinaModel::grad_check(const Sample& s, double pos_weight, size_t n_intervals,
                               double eps) {
    for (auto& t : tensors_) t.grad.setZero();
    forward_backward(s, pos_weight, n_intervals);
    auto loss_now = [&]() {
        if (mode_ == Mode::static_head)
            return weighted_bce(static_forward(s), s.label, pos_weight);
        auto ps = dynamic_forward(s, n_intervals);
        double l = 0.0;
        for (size_t t = 0; t < ps.size(); ++t) {
            int target = t < s.labels_per_bin.size() ? s.labels_per_bin[t] : 0;
            l += weighted_bce(ps[t], target, pos_weight);
        }
        return l / static_cast<double>(ps.size());
    };
    double max_rel = 0.0;
    for (auto& t : tensors_) {
        for (Eigen::Index i = 0; i < t.value.size(); ++i) {
            double saved = t.value.data()[i];
            t.value.data()[i] = saved + eps;
            double lp = loss_now();
            t.value.data()[i] = saved - eps;
            double lm = loss_now();
            t.value.data()[i] = saved;
            double numeric = (lp - lm) / (2.0 * eps);
            double analytic = t.grad.data()[i];
            if (std::abs(numeric) < 1e-10 && std::abs(analytic) < 1e-10) continue;
            // the floor keeps finite-difference roundoff on near-zero entries
            // from dominating the relative error
            double rel = std::abs(numeric - analytic) /
                         std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

std::vector<ScoredCandidate> predict_retweeters(const RetinaModel& model,
                                                const std::vector<Sample>& candidates,
                                                size_t n_intervals) {
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (const auto& s : candidates) {
        ScoredCandidate sc;
        sc.candidate_id = s.candidate_id;
        if (model.mode() == Mode::static_head) {
            sc.score = model.static_forward(s);
        } else {
            sc.scores = model.dynamic_forward(s, n_intervals);
            double sum = 0.0;
            for (double p : sc.scores) sum += p;
            sc.score = sc.scores.empty() ? 0.0 : sum / static_cast<double>(sc.scores.size());
        }
        out.push_back(std::move(sc));
    }
    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.candidate_id < b.candidate_id;
    });
    return out;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

MatrixXd matrix_from_json(const json& rows) {
    if (rows.empty()) return MatrixXd(0, 0);
    MatrixXd m(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

}  // namespace

void RetinaModel::save(const std::filesystem::path& path) const {
    json obj;
    obj["format"] = "diffusia-retina-v1";
    obj["mode"] = mode_ == Mode::static_head ? "static" : "dynamic";
    obj["use_attention"] = use_attention_;
    obj["dim_user"] = dim_user_;
    obj["dim_tweet"] = dim_tweet_;
    obj["dim_news"] = dim_news_;
    obj["hdim"] = hdim_;
    json params = json::object();
    for (const auto& t : tensors_) params[t.name] = matrix_to_json(t.value);
    obj["parameters"] = params;
    write_file(path, obj.dump() + "\n");
}

RetinaModel RetinaModel::load(const std::filesystem::path& path) {
    json obj = json::parse(read_file(path));
    if (obj.value("format", "") != "diffusia-retina-v1")
        throw std::runtime_error("not a diffusia-retina-v1 container: " + path.string());
    RetinaModel m = init(obj["mode"] == "static" ? Mode::static_head : Mode::dynamic_head,
                         obj["dim_user"].get<size_t>(), obj["dim_tweet"].get<size_t>(),
                         obj["dim_news"].get<size_t>(), obj["hdim"].get<size_t>(), 0,
                         obj["use_attention"].get<bool>());
    for (auto& t : m.tensors_) t.value = matrix_from_json(obj["parameters"][t.name]);
    return m;
}

}  // namespace diffusia::retina
