#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "diffusia/jsonl.hpp"
#include "diffusia/retina.hpp"
#include "diffusia/rng.hpp"

using namespace diffusia;
using retina::MatrixXd;
using retina::VectorXd;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
    return m;
}

VectorXd random_vector(Rng& rng, Eigen::Index n) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.next_normal();
    return v;
}

retina::Sample random_sample(Rng& rng, Eigen::Index du, Eigen::Index dt, Eigen::Index dn,
                             Eigen::Index k, size_t n_bins = 0) {
    retina::Sample s;
    s.x_user = random_vector(rng, du);
    s.x_tweet = random_vector(rng, dt);
    s.x_news = random_matrix(rng, k, dn);
    s.label = static_cast<int>(rng.next_below(2));
    for (size_t b = 0; b < n_bins; ++b)
        s.labels_per_bin.push_back(static_cast<int>(rng.next_below(2)));
    return s;
}

const MatrixXd& named(const retina::RetinaModel& model, const std::string& name) {
    for (const auto& t : const_cast<retina::RetinaModel&>(model).tensors())
        if (t.name == name) return t.value;
    throw std::runtime_error("missing tensor " + name);
}

// fully loop-based static forward oracle, no Eigen products
double static_oracle(const retina::RetinaModel& model, const retina::Sample& s) {
    const MatrixXd& W_Q = named(model, "W_Q");
    const MatrixXd& W_K = named(model, "W_K");
    const MatrixXd& W_V = named(model, "W_V");
    const MatrixXd& W1 = named(model, "W1");
    const MatrixXd& b1 = named(model, "b1");
    const MatrixXd& w2 = named(model, "w2");
    const MatrixXd& b2 = named(model, "b2");
    const auto h = W1.rows();

    double norm = 0.0;
    for (Eigen::Index i = 0; i < s.x_user.size(); ++i) norm += s.x_user(i) * s.x_user(i);
    norm = std::sqrt(norm);
    std::vector<double> xu(s.x_user.size());
    for (Eigen::Index i = 0; i < s.x_user.size(); ++i)
        xu[i] = norm > 0.0 ? s.x_user(i) / norm : s.x_user(i);

    std::vector<double> h1(h);
    for (Eigen::Index i = 0; i < h; ++i) {
        double z = b1(i, 0);
        for (Eigen::Index j = 0; j < W1.cols(); ++j) z += W1(i, j) * xu[j];
        h1[i] = z > 0.0 ? z : 0.0;
    }

    std::vector<double> xtn(h, 0.0);
    const auto k = s.x_news.rows();
    if (model.use_attention() && k > 0) {
        std::vector<double> Q(h, 0.0);
        for (Eigen::Index c = 0; c < h; ++c)
            for (Eigen::Index r = 0; r < W_Q.rows(); ++r) Q[c] += s.x_tweet(r) * W_Q(r, c);
        std::vector<std::vector<double>> K(k, std::vector<double>(h, 0.0)), V = K;
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index c = 0; c < h; ++c)
                for (Eigen::Index r = 0; r < W_K.rows(); ++r) {
                    K[i][c] += s.x_news(i, r) * W_K(r, c);
                    V[i][c] += s.x_news(i, r) * W_V(r, c);
                }
        std::vector<double> logits(k, 0.0);
        double mx = -1e300;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index c = 0; c < h; ++c) logits[i] += Q[c] * K[i][c];
            logits[i] /= std::sqrt(static_cast<double>(h));
            mx = std::max(mx, logits[i]);
        }
        double denom = 0.0;
        std::vector<double> A(k);
        for (Eigen::Index i = 0; i < k; ++i) denom += std::exp(logits[i] - mx);
        for (Eigen::Index i = 0; i < k; ++i) A[i] = std::exp(logits[i] - mx) / denom;
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index c = 0; c < h; ++c) xtn[c] += A[i] * V[i][c];
    }

    double logit = b2(0, 0);
    for (Eigen::Index c = 0; c < h; ++c) logit += w2(0, c) * h1[c];
    for (Eigen::Index c = 0; c < h; ++c) logit += w2(0, h + c) * xtn[c];
    return 1.0 / (1.0 + std::exp(-logit));
}

void zero_all(retina::RetinaModel& model) {
    for (auto& t : model.tensors()) t.value.setZero();
}

}  // namespace

TEST_CASE("qkv") {
    Rng rng(1);
    retina::AttentionParams p{random_matrix(rng, 4, 3), random_matrix(rng, 5, 3),
                              random_matrix(rng, 5, 3)};
    SUBCASE("zero tweet vector gives zero query") {
        auto out = retina::qkv(VectorXd::Zero(4), random_matrix(rng, 2, 5), p);
        CHECK(out.Q.norm() == 0.0);
    }
    SUBCASE("one-hot news row with identity-like kernel selects a kernel row") {
        MatrixXd news = MatrixXd::Zero(1, 5);
        news(0, 2) = 1.0;
        auto out = retina::qkv(random_vector(rng, 4), news, p);
        for (int c = 0; c < 3; ++c) {
            CHECK(out.K(0, c) == doctest::Approx(p.W_K(2, c)).epsilon(1e-15));
            CHECK(out.V(0, c) == doctest::Approx(p.W_V(2, c)).epsilon(1e-15));
        }
    }
    SUBCASE("matches an explicit double-loop matrix multiply oracle") {
        auto x_tweet = random_vector(rng, 4);
        auto x_news = random_matrix(rng, 6, 5);
        auto out = retina::qkv(x_tweet, x_news, p);
        for (int c = 0; c < 3; ++c) {
            double q = 0.0;
            for (int r = 0; r < 4; ++r) q += x_tweet(r) * p.W_Q(r, c);
            CHECK(std::abs(out.Q(c) - q) < 1e-12);
        }
        for (int i = 0; i < 6; ++i)
            for (int c = 0; c < 3; ++c) {
                double kk = 0.0, vv = 0.0;
                for (int r = 0; r < 5; ++r) {
                    kk += x_news(i, r) * p.W_K(r, c);
                    vv += x_news(i, r) * p.W_V(r, c);
                }
                CHECK(std::abs(out.K(i, c) - kk) < 1e-12);
                CHECK(std::abs(out.V(i, c) - vv) < 1e-12);
            }
    }
    SUBCASE("shape mismatch errors") {
        CHECK_THROWS(retina::qkv(random_vector(rng, 3), random_matrix(rng, 2, 5), p));
        CHECK_THROWS(retina::qkv(random_vector(rng, 4), random_matrix(rng, 2, 4), p));
    }
}

TEST_CASE("attention_weights") {
    Rng rng(2);
    SUBCASE("single news item gets weight 1.0") {
        auto A = retina::attention_weights(random_vector(rng, 3), random_matrix(rng, 1, 3));
        REQUIRE(A.size() == 1);
        CHECK(A(0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("identical keys give the uniform distribution") {
        VectorXd Q = random_vector(rng, 4);
        MatrixXd K(3, 4);
        VectorXd row = random_vector(rng, 4);
        for (int i = 0; i < 3; ++i) K.row(i) = row.transpose();
        auto A = retina::attention_weights(Q, K);
        for (int i = 0; i < 3; ++i) CHECK(A(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("matches the direct scaled-softmax formula") {
        VectorXd Q = random_vector(rng, 4);
        MatrixXd K = random_matrix(rng, 3, 4);
        auto A = retina::attention_weights(Q, K);
        double denom = 0.0;
        std::vector<double> e(3);
        for (int i = 0; i < 3; ++i) {
            double logit = 0.0;
            for (int c = 0; c < 4; ++c) logit += Q(c) * K(i, c);
            e[i] = std::exp(logit / 2.0);  // hdim^-0.5 with hdim 4
            denom += e[i];
        }
        for (int i = 0; i < 3; ++i)
            CHECK(A(i) == doctest::Approx(e[i] / denom).epsilon(1e-12));
    }
    SUBCASE("weights sum to 1 and lie in (0,1)") {
        for (int trial = 0; trial < 50; ++trial) {
            auto A = retina::attention_weights(random_vector(rng, 5),
                                               random_matrix(rng, 1 + rng.next_below(6), 5));
            CHECK(std::abs(A.sum() - 1.0) < 1e-9);
            for (int i = 0; i < A.size(); ++i) {
                CHECK(A(i) > 0.0);
                CHECK(A(i) < 1.0 + 1e-15);
            }
        }
    }
    SUBCASE("empty news sequence errors") {
        CHECK_THROWS(retina::attention_weights(random_vector(rng, 3), MatrixXd(0, 3)));
    }
}

TEST_CASE("attend") {
    Rng rng(3);
    SUBCASE("one-hot weights select the matching value row") {
        MatrixXd V = random_matrix(rng, 3, 4);
        VectorXd A = VectorXd::Zero(3);
        A(1) = 1.0;
        auto x = retina::attend(V, A);
        for (int c = 0; c < 4; ++c) CHECK(x(c) == doctest::Approx(V(1, c)).epsilon(1e-15));
    }
    SUBCASE("identical value rows are returned regardless of the weights") {
        VectorXd row = random_vector(rng, 4);
        MatrixXd V(3, 4);
        for (int i = 0; i < 3; ++i) V.row(i) = row.transpose();
        VectorXd A(3);
        A << 0.2, 0.5, 0.3;
        auto x = retina::attend(V, A);
        for (int c = 0; c < 4; ++c) CHECK(x(c) == doctest::Approx(row(c)).epsilon(1e-12));
    }
    SUBCASE("matches the weighted-sum loop oracle") {
        MatrixXd V = random_matrix(rng, 5, 4);
        VectorXd A = retina::attention_weights(random_vector(rng, 4), random_matrix(rng, 5, 4));
        auto x = retina::attend(V, A);
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int i = 0; i < 5; ++i) s += A(i) * V(i, c);
            CHECK(std::abs(x(c) - s) < 1e-12);
        }
    }
    SUBCASE("attend is linear in V") {
        MatrixXd V1 = random_matrix(rng, 4, 3), V2 = random_matrix(rng, 4, 3);
        VectorXd A = retina::attention_weights(random_vector(rng, 3), random_matrix(rng, 4, 3));
        VectorXd lhs = retina::attend(2.5 * V1 - 0.7 * V2, A);
        VectorXd a1 = retina::attend(V1, A), a2 = retina::attend(V2, A);
        VectorXd rhs = 2.5 * a1 - 0.7 * a2;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("length mismatch errors") {
        CHECK_THROWS(retina::attend(random_matrix(rng, 3, 4), random_vector(rng, 2)));
    }
}

TEST_CASE("permuting the news sequence permutes A and leaves the pooled output fixed") {
    Rng rng(4);
    VectorXd x_tweet = random_vector(rng, 4);
    MatrixXd x_news = random_matrix(rng, 5, 6);
    retina::AttentionParams p{random_matrix(rng, 4, 3), random_matrix(rng, 6, 3),
                              random_matrix(rng, 6, 3)};
    auto base = retina::qkv(x_tweet, x_news, p);
    auto A0 = retina::attention_weights(base.Q, base.K);
    auto x0 = retina::attend(base.V, A0);

    std::vector<int> perm{3, 0, 4, 1, 2};
    MatrixXd shuffled(5, 6);
    for (int i = 0; i < 5; ++i) shuffled.row(i) = x_news.row(perm[i]);
    auto out = retina::qkv(x_tweet, shuffled, p);
    auto A1 = retina::attention_weights(out.Q, out.K);
    auto x1 = retina::attend(out.V, A1);

    for (int i = 0; i < 5; ++i) CHECK(std::abs(A1(i) - A0(perm[i])) < 1e-10);
    CHECK((x1 - x0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("class_weight") {
    CHECK(retina::class_weight(100, 100, 2.0) == 0.0);
    CHECK(retina::class_weight(1000, 100, 2.0) ==
          doctest::Approx(2.0 * std::log(10.0)).epsilon(1e-12));
    CHECK(retina::class_weight(1000, 100, 2.0) == doctest::Approx(4.60517).epsilon(1e-5));
    CHECK(retina::class_weight(3057, 306, 2.5) ==
          doctest::Approx(2.5 * std::log(3057.0 / 306.0)).epsilon(1e-12));
    CHECK_THROWS(retina::class_weight(10, 0, 1.0));
    CHECK_THROWS(retina::class_weight(5, 10, 1.0));
    SUBCASE("monotone in lambda and in imbalance") {
        CHECK(retina::class_weight(1000, 100, 2.5) > retina::class_weight(1000, 100, 2.0));
        CHECK(retina::class_weight(1000, 50, 2.0) > retina::class_weight(1000, 100, 2.0));
    }
}

TEST_CASE("weighted_bce") {
    CHECK(retina::weighted_bce(0.5, 1, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(retina::weighted_bce(0.5, 0, 7.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(retina::weighted_bce(1.0, 1, 1.0) < 1e-6);
    CHECK(retina::weighted_bce(0.0, 0, 3.0) < 1e-6);
    SUBCASE("nonnegative everywhere, scales with w on positives") {
        Rng rng(5);
        for (int i = 0; i < 100; ++i) {
            double p = rng.next_double();
            CHECK(retina::weighted_bce(p, 1, 2.0) >= 0.0);
            CHECK(retina::weighted_bce(p, 0, 2.0) >= 0.0);
            CHECK(retina::weighted_bce(p, 1, 2.0) ==
                  doctest::Approx(2.0 * retina::weighted_bce(p, 1, 1.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("static_forward") {
    Rng rng(6);
    SUBCASE("all-zero parameters output 0.5") {
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 5, 4, 6, 3, 1);
        zero_all(model);
        auto s = random_sample(rng, 5, 4, 6, 3);
        CHECK(model.static_forward(s) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("outputs strictly in (0,1) over random inputs") {
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 5, 4, 6, 3, 2);
        for (int i = 0; i < 200; ++i) {
            double p = model.static_forward(random_sample(rng, 5, 4, 6, rng.next_below(4)));
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
    SUBCASE("matches the hand-rolled loop oracle") {
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 5, 4, 6, 3, 3);
        for (int i = 0; i < 30; ++i) {
            auto s = random_sample(rng, 5, 4, 6, 1 + rng.next_below(5));
            CHECK(std::abs(model.static_forward(s) - static_oracle(model, s)) < 1e-10);
        }
    }
    SUBCASE("attention-free model ignores the news sequence") {
        auto model =
            retina::RetinaModel::init(retina::Mode::static_head, 5, 4, 6, 3, 4, false);
        auto s = random_sample(rng, 5, 4, 6, 3);
        auto t = s;
        t.x_news = random_matrix(rng, 5, 6);
        CHECK(model.static_forward(s) == model.static_forward(t));
    }
    SUBCASE("wrong mode errors") {
        auto model = retina::RetinaModel::init(retina::Mode::dynamic_head, 5, 4, 6, 3, 5);
        CHECK_THROWS(model.static_forward(random_sample(rng, 5, 4, 6, 2)));
    }
}

TEST_CASE("dynamic_forward") {
    Rng rng(7);
    SUBCASE("output length equals n_intervals") {
        auto model = retina::RetinaModel::init(retina::Mode::dynamic_head, 5, 4, 6, 3, 1);
        auto s = random_sample(rng, 5, 4, 6, 2, 4);
        for (size_t n : {1, 3, 8})
            CHECK(model.dynamic_forward(s, n).size() == n);
        CHECK_THROWS(model.dynamic_forward(s, 0));
    }
    SUBCASE("saturated update gate with no recurrence reduces to a closed form") {
        // bz >> 0 forces z ~ 1 and Uh = 0 removes the hidden feedback, so
        // h_1 = tanh(Wh z + bh) and P_1 = sigmoid(w_out h_1 + b_out)
        auto model = retina::RetinaModel::init(retina::Mode::dynamic_head, 5, 4, 6, 3, 2);
        for (auto& t : model.tensors()) {
            if (t.name == "bz") t.value.setConstant(50.0);
            if (t.name == "Uh") t.value.setZero();
        }
        auto s = random_sample(rng, 5, 4, 6, 2, 1);
        double got = model.dynamic_forward(s, 1)[0];
        // rebuild the concatenated encoder input via a static-mode twin that
        // shares the encoder tensors
        auto twin = retina::RetinaModel::init(retina::Mode::static_head, 5, 4, 6, 3, 2);
        // twin was seeded identically, so encoder tensors match; recover z by
        // probing the oracle pieces directly
        const MatrixXd& Wh = named(model, "Wh");
        const MatrixXd& bh = named(model, "bh");
        const MatrixXd& w_out = named(model, "w_out");
        const MatrixXd& b_out = named(model, "b_out");
        const MatrixXd& W1 = named(model, "W1");
        const MatrixXd& b1 = named(model, "b1");
        VectorXd xu = s.x_user / s.x_user.norm();
        VectorXd h1 = (W1 * xu + b1.col(0)).cwiseMax(0.0);
        auto att = retina::qkv(s.x_tweet, s.x_news,
                               retina::AttentionParams{named(model, "W_Q"),
                                                       named(model, "W_K"),
                                                       named(model, "W_V")});
        VectorXd A = retina::attention_weights(att.Q, att.K);
        VectorXd xtn = retina::attend(att.V, A);
        VectorXd z(6);
        z << h1, xtn;
        VectorXd hidden = ((Wh * z + bh.col(0)).array().tanh()).matrix();
        double expect = 1.0 / (1.0 + std::exp(-((w_out * hidden)(0, 0) + b_out(0, 0))));
        CHECK(got == doctest::Approx(expect).epsilon(1e-10));
        (void)twin;
    }
    SUBCASE("n=3 matches a step-by-step cell-equation oracle") {
        auto model = retina::RetinaModel::init(retina::Mode::dynamic_head, 5, 4, 6, 3, 3);
        auto s = random_sample(rng, 5, 4, 6, 3, 3);
        auto got = model.dynamic_forward(s, 3);

        VectorXd xu = s.x_user / s.x_user.norm();
        VectorXd h1 = (named(model, "W1") * xu + named(model, "b1").col(0)).cwiseMax(0.0);
        auto att = retina::qkv(s.x_tweet, s.x_news,
                               retina::AttentionParams{named(model, "W_Q"),
                                                       named(model, "W_K"),
                                                       named(model, "W_V")});
        VectorXd A = retina::attention_weights(att.Q, att.K);
        VectorXd xtn = retina::attend(att.V, A);
        VectorXd z(6);
        z << h1, xtn;
        VectorXd h = VectorXd::Zero(3);
        auto sig = [](const VectorXd& v) {
            VectorXd out(v.size());
            for (int i = 0; i < v.size(); ++i) out(i) = 1.0 / (1.0 + std::exp(-v(i)));
            return out;
        };
        for (int t = 0; t < 3; ++t) {
            VectorXd zg = sig(named(model, "Wz") * z + named(model, "Uz") * h +
                              named(model, "bz").col(0));
            VectorXd rg = sig(named(model, "Wr") * z + named(model, "Ur") * h +
                              named(model, "br").col(0));
            VectorXd cand = (named(model, "Wh") * z +
                             named(model, "Uh") * rg.cwiseProduct(h) +
                             named(model, "bh").col(0))
                                .array()
                                .tanh()
                                .matrix();
            h = (VectorXd::Ones(3) - zg).cwiseProduct(h) + zg.cwiseProduct(cand);
            double p = 1.0 / (1.0 + std::exp(-((named(model, "w_out") * h)(0, 0) +
                                               named(model, "b_out")(0, 0))));
            CHECK(std::abs(got[t] - p) < 1e-10);
        }
    }
}

TEST_CASE("grad_check") {
    Rng rng(8);
    SUBCASE("static mode") {
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 6, 5, 7, 8, 11);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            auto s = random_sample(rng, 6, 5, 7, 3);
            worst = std::max(worst, model.grad_check(s, 1.7, 0));
        }
        CHECK(worst < 1e-4);
    }
    SUBCASE("dynamic mode, n=3") {
        auto model = retina::RetinaModel::init(retina::Mode::dynamic_head, 6, 5, 7, 8, 12);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            auto s = random_sample(rng, 6, 5, 7, 3, 3);
            worst = std::max(worst, model.grad_check(s, 2.1, 3));
        }
        CHECK(worst < 1e-4);
    }
    SUBCASE("dead-ReLU fixture is handled by the small-gradient guard") {
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 4, 5, 7, 8, 13);
        for (auto& t : model.tensors())
            if (t.name == "b1") t.value.setConstant(-100.0);  // every unit dead
        auto s = random_sample(rng, 4, 5, 7, 2);
        CHECK(model.grad_check(s, 1.0, 0) < 1e-4);
    }
}

TEST_CASE("train") {
    Rng rng(9);
    SUBCASE("loss decreases on a learnable toy") {
        // planted signal: label = 1 iff x_user[0] > 0
        std::vector<retina::Sample> data;
        for (int i = 0; i < 200; ++i) {
            auto s = random_sample(rng, 4, 3, 5, 2);
            s.label = s.x_user(0) > 0.0 ? 1 : 0;
            data.push_back(std::move(s));
        }
        auto model = retina::RetinaModel::init(retina::Mode::static_head, 4, 3, 5, 6, 21);
        retina::TrainConfig cfg;
        cfg.epochs = 8;
        cfg.lambda = 1.0;
        cfg.seed = 21;
        auto result = model.train(data, cfg);
        REQUIRE(result.loss_per_epoch.size() == 8);
        CHECK(result.loss_per_epoch.back() < result.loss_per_epoch.front());
    }
    SUBCASE("same seed gives bitwise-identical parameters") {
        std::vector<retina::Sample> data;
        for (int i = 0; i < 40; ++i) data.push_back(random_sample(rng, 4, 3, 5, 2, 2));
        // ensure both classes exist
        data[0].label = 1;
        data[1].label = 0;
        retina::TrainConfig cfg;
        cfg.epochs = 3;
        cfg.seed = 5;
        auto run = [&](uint64_t seed) {
            auto m = retina::RetinaModel::init(retina::Mode::static_head, 4, 3, 5, 6, seed);
            m.train(data, cfg);
            return m;
        };
        auto a = run(33), b = run(33);
        for (size_t i = 0; i < a.tensors().size(); ++i)
            CHECK(a.tensors()[i].value == b.tensors()[i].value);
    }
    SUBCASE("empty dataset and missing dynamic labels error") {
        auto m = retina::RetinaModel::init(retina::Mode::dynamic_head, 4, 3, 5, 6, 1);
        CHECK_THROWS(m.train({}, {}));
        retina::TrainConfig cfg;
        cfg.n_intervals = 4;
        std::vector<retina::Sample> data{random_sample(rng, 4, 3, 5, 2, 2)};  // 2 != 4 bins
        CHECK_THROWS(m.train(data, cfg));
    }
}

TEST_CASE("predict_retweeters") {
    Rng rng(10);
    auto model = retina::RetinaModel::init(retina::Mode::static_head, 4, 3, 5, 6, 31);
    SUBCASE("one candidate gives a ranking of length 1") {
        auto s = random_sample(rng, 4, 3, 5, 2);
        s.candidate_id = "only";
        auto out = retina::predict_retweeters(model, {s});
        REQUIRE(out.size() == 1);
        CHECK(out[0].candidate_id == "only");
    }
    SUBCASE("equal scores rank in candidate-id order") {
        auto s = random_sample(rng, 4, 3, 5, 2);
        auto a = s, b = s, c = s;
        a.candidate_id = "zeta";
        b.candidate_id = "alpha";
        c.candidate_id = "mid";
        auto out = retina::predict_retweeters(model, {a, b, c});
        CHECK(out[0].candidate_id == "alpha");
        CHECK(out[1].candidate_id == "mid");
        CHECK(out[2].candidate_id == "zeta");
    }
    SUBCASE("ranking equals a brute-force sort of forward outputs") {
        std::vector<retina::Sample> cands;
        for (int i = 0; i < 12; ++i) {
            auto s = random_sample(rng, 4, 3, 5, 2);
            s.candidate_id = "c" + std::to_string(i);
            cands.push_back(std::move(s));
        }
        auto out = retina::predict_retweeters(model, cands);
        std::vector<std::pair<double, std::string>> oracle;
        for (const auto& s : cands) oracle.push_back({model.static_forward(s), s.candidate_id});
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(out.size() == oracle.size());
        for (size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i].candidate_id == oracle[i].second);
            CHECK(out[i].score == oracle[i].first);
        }
    }
    SUBCASE("empty candidate set gives an empty result") {
        CHECK(retina::predict_retweeters(model, {}).empty());
    }
    SUBCASE("dynamic mode ranks by mean per-bin score") {
        auto dmodel = retina::RetinaModel::init(retina::Mode::dynamic_head, 4, 3, 5, 6, 32);
        auto s = random_sample(rng, 4, 3, 5, 2, 4);
        s.candidate_id = "x";
        auto out = retina::predict_retweeters(dmodel, {s}, 4);
        REQUIRE(out.size() == 1);
        REQUIRE(out[0].scores.size() == 4);
        double mean = 0.0;
        for (double p : out[0].scores) mean += p / 4.0;
        CHECK(out[0].score == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("retina model round-trips through the diffusia-retina-v1 container") {
    namespace fs = std::filesystem;
    Rng rng(11);
    for (auto mode : {retina::Mode::static_head, retina::Mode::dynamic_head}) {
        auto model = retina::RetinaModel::init(mode, 4, 3, 5, 6, 41);
        auto p = fs::temp_directory_path() / "diffusia_test_retina.json";
        model.save(p);
        auto loaded = retina::RetinaModel::load(p);
        CHECK(loaded.mode() == mode);
        CHECK(loaded.hdim() == model.hdim());
        auto s = random_sample(rng, 4, 3, 5, 3, 4);
        if (mode == retina::Mode::static_head)
            CHECK(loaded.static_forward(s) == model.static_forward(s));
        else
            CHECK(loaded.dynamic_forward(s, 4) == model.dynamic_forward(s, 4));
    }
    auto bad = fs::temp_directory_path() / "diffusia_test_notretina.json";
    write_file(bad, "{\"format\": \"nope\"}\n");
    CHECK_THROWS(retina::RetinaModel::load(bad));
}
