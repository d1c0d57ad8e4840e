#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "diffusia/hategen.hpp"
#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

using namespace diffusia;

namespace {

hategen::LabeledDataset make_dataset(size_t n_pos, size_t n_neg, uint64_t seed,
                                     size_t dim = 3) {
    Rng rng(seed);
    hategen::LabeledDataset ds;
    for (size_t i = 0; i < n_pos + n_neg; ++i) {
        std::vector<double> row(dim);
        for (double& v : row) v = rng.next_double();
        ds.X.push_back(std::move(row));
        ds.y.push_back(i < n_pos ? 1 : 0);
        ds.meta.push_back({"u" + std::to_string(i), "tag", 0});
    }
    return ds;
}

// independent plug-in MI oracle over the binned joint histogram
double mi_oracle(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                 size_t col, size_t bins) {
    double lo = X[0][col], hi = X[0][col];
    for (const auto& r : X) {
        lo = std::min(lo, r[col]);
        hi = std::max(hi, r[col]);
    }
    if (hi <= lo) return 0.0;
    std::map<std::pair<size_t, int>, double> joint;
    std::map<size_t, double> px;
    std::map<int, double> py;
    const double n = static_cast<double>(X.size());
    for (size_t i = 0; i < X.size(); ++i) {
        auto b = static_cast<size_t>((X[i][col] - lo) / (hi - lo) * bins);
        if (b >= bins) b = bins - 1;
        joint[{b, y[i] ? 1 : 0}] += 1.0 / n;
        px[b] += 1.0 / n;
        py[y[i] ? 1 : 0] += 1.0 / n;
    }
    double mi = 0.0;
    for (const auto& [key, p] : joint)
        mi += p * std::log(p / (px[key.first] * py[key.second]));
    return mi;
}

size_t tree_depth(const json& node) {
    if (!node.contains("left")) return 0;
    return 1 + std::max(tree_depth(node["left"]), tree_depth(node["right"]));
}

std::string row_key(const std::vector<double>& row) {
    std::string k;
    for (double v : row) k += std::to_string(v) + "|";
    return k;
}

}  // namespace

TEST_CASE("downsample") {
    SUBCASE("balanced dataset is unchanged") {
        auto ds = make_dataset(10, 10, 1);
        auto out = hategen::downsample(ds, 7);
        CHECK(out.rows() == 20);
        CHECK(out.positives() == 10);
    }
    SUBCASE("5 pos / 50 neg becomes 5/5") {
        auto ds = make_dataset(5, 50, 2);
        auto out = hategen::downsample(ds, 7);
        CHECK(out.rows() == 10);
        CHECK(out.positives() == 5);
    }
    SUBCASE("rows are preserved bitwise, only multiplicity changes") {
        auto ds = make_dataset(5, 50, 3);
        std::set<std::string> originals;
        for (const auto& r : ds.X) originals.insert(row_key(r));
        auto out = hategen::downsample(ds, 7);
        for (const auto& r : out.X) CHECK(originals.count(row_key(r)) == 1);
        // without replacement: no duplicates among kept negatives
        std::set<std::string> seen;
        for (size_t i = 0; i < out.rows(); ++i)
            if (!out.y[i]) CHECK(seen.insert(row_key(out.X[i])).second);
    }
    SUBCASE("deterministic per seed, different across seeds") {
        auto ds = make_dataset(5, 60, 4);
        auto a = hategen::downsample(ds, 1);
        auto b = hategen::downsample(ds, 1);
        CHECK(a.X == b.X);
        auto c = hategen::downsample(ds, 2);
        CHECK(a.X != c.X);
    }
    SUBCASE("single-class dataset errors") {
        auto ds = make_dataset(5, 0, 5);
        CHECK_THROWS(hategen::downsample(ds, 1));
        CHECK_THROWS(hategen::upsample(ds, 1));
    }
}

TEST_CASE("upsample") {
    auto ds = make_dataset(5, 50, 6);
    auto out = hategen::upsample(ds, 9);
    CHECK(out.rows() == 100);
    CHECK(out.positives() == 50);
    SUBCASE("every synthetic row equals some original positive") {
        std::set<std::string> pos_rows;
        for (size_t i = 0; i < ds.rows(); ++i)
            if (ds.y[i]) pos_rows.insert(row_key(ds.X[i]));
        for (size_t i = 0; i < out.rows(); ++i)
            if (out.y[i]) CHECK(pos_rows.count(row_key(out.X[i])) == 1);
    }
    SUBCASE("originals are all retained") {
        std::multiset<std::string> outs;
        for (const auto& r : out.X) outs.insert(row_key(r));
        for (const auto& r : ds.X) CHECK(outs.count(row_key(r)) >= 1);
    }
}

TEST_CASE("pca_fit and pca_transform") {
    SUBCASE("k exceeding min(rows, cols) errors") {
        auto ds = make_dataset(3, 3, 10, 4);
        CHECK_THROWS(hategen::pca_fit(ds.X, 5));
    }
    SUBCASE("data in a 3-dim subspace reconstructs exactly with k=3") {
        Rng rng(11);
        std::vector<std::vector<double>> basis(3, std::vector<double>(8));
        for (auto& b : basis)
            for (double& v : b) v = rng.next_normal();
        std::vector<std::vector<double>> X;
        for (int i = 0; i < 20; ++i) {
            std::vector<double> row(8, 0.0);
            for (int c = 0; c < 3; ++c) {
                double a = rng.next_normal();
                for (int j = 0; j < 8; ++j) row[j] += a * basis[c][j];
            }
            X.push_back(std::move(row));
        }
        auto model = hategen::pca_fit(X, 3);
        auto proj = hategen::pca_transform(model, X);
        for (size_t i = 0; i < X.size(); ++i) {
            std::vector<double> rec = model.mean;
            for (size_t c = 0; c < 3; ++c)
                for (size_t j = 0; j < 8; ++j) rec[j] += proj[i][c] * model.components[c][j];
            for (size_t j = 0; j < 8; ++j)
                CHECK(std::abs(rec[j] - X[i][j]) < 1e-9);
        }
    }
    SUBCASE("2-D points on a line: first component captures all variance") {
        std::vector<std::vector<double>> X;
        for (int i = 0; i < 10; ++i)
            X.push_back({static_cast<double>(i), 2.0 * i + 1.0});
        auto model = hategen::pca_fit(X, 2);
        auto proj = hategen::pca_transform(model, X);
        double var1 = 0.0, var2 = 0.0;
        for (const auto& p : proj) {
            var1 += p[0] * p[0];
            var2 += p[1] * p[1];
        }
        CHECK(var2 / var1 < 1e-18);
    }
    SUBCASE("matches a brute-force covariance eigendecomposition up to sign") {
        Rng rng(13);
        std::vector<std::vector<double>> X;
        for (int i = 0; i < 20; ++i) {
            std::vector<double> row(8);
            for (double& v : row) v = rng.next_normal();
            X.push_back(std::move(row));
        }
        auto model = hategen::pca_fit(X, 3);
        Eigen::MatrixXd M(20, 8);
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 8; ++j) M(i, j) = X[i][j];
        Eigen::RowVectorXd mean = M.colwise().mean();
        M.rowwise() -= mean;
        Eigen::MatrixXd cov = M.transpose() * M;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        for (int c = 0; c < 3; ++c) {
            Eigen::VectorXd v = es.eigenvectors().col(7 - c);  // descending eigenvalue
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            if (v(imax) < 0) v = -v;
            for (int j = 0; j < 8; ++j)
                CHECK(model.components[c][j] == doctest::Approx(v(j)).epsilon(1e-8));
        }
    }
    SUBCASE("transform of the training mean is the zero vector") {
        auto ds = make_dataset(5, 5, 14, 6);
        auto model = hategen::pca_fit(ds.X, 4);
        auto out = hategen::pca_transform(model, {model.mean});
        for (double v : out[0]) CHECK(std::abs(v) < 1e-9);
    }
    SUBCASE("transform dimension mismatch errors") {
        auto ds = make_dataset(5, 5, 15, 6);
        auto model = hategen::pca_fit(ds.X, 2);
        CHECK_THROWS(hategen::pca_transform(model, {{1.0, 2.0}}));
    }
}

TEST_CASE("mi_topk") {
    SUBCASE("feature identical to y ranks first, constant ranks last") {
        Rng rng(21);
        std::vector<std::vector<double>> X;
        std::vector<int> y;
        for (int i = 0; i < 60; ++i) {
            int label = static_cast<int>(rng.next_below(2));
            X.push_back({rng.next_double(), static_cast<double>(label), 7.0});
            y.push_back(label);
        }
        auto order = hategen::mi_topk(X, y, 3);
        CHECK(order[0] == 1);
        CHECK(order[2] == 2);
        CHECK(hategen::mi_column(X, y, 2) == 0.0);
    }
    SUBCASE("4-feature fixture matches the brute-force histogram oracle") {
        Rng rng(22);
        std::vector<std::vector<double>> X;
        std::vector<int> y;
        for (int i = 0; i < 80; ++i) {
            int label = static_cast<int>(rng.next_below(2));
            X.push_back({rng.next_double(), rng.next_double() + 0.5 * label,
                         static_cast<double>(rng.next_below(3)), rng.next_normal()});
            y.push_back(label);
        }
        for (size_t c = 0; c < 4; ++c)
            CHECK(hategen::mi_column(X, y, c, 10) ==
                  doctest::Approx(mi_oracle(X, y, c, 10)).epsilon(1e-12));
        // ranking equals the oracle's stable sort with the same tie rule
        std::vector<std::pair<double, size_t>> scored;
        for (size_t c = 0; c < 4; ++c) scored.push_back({mi_oracle(X, y, c, 10), c});
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        auto order = hategen::mi_topk(X, y, 4);
        for (size_t i = 0; i < 4; ++i) CHECK(order[i] == scored[i].second);
    }
    SUBCASE("ties break by lower column index") {
        // two identical constant columns: MI 0 each, index order preserved
        std::vector<std::vector<double>> X{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
        std::vector<int> y{0, 1, 0};
        auto order = hategen::mi_topk(X, y, 2);
        CHECK(order == std::vector<size_t>{0, 1});
    }
    SUBCASE("k exceeding column count errors") {
        std::vector<std::vector<double>> X{{1.0}};
        CHECK_THROWS(hategen::mi_topk(X, {1}, 2));
    }
}

TEST_CASE("train_classifier") {
    SUBCASE("linearly separable toy reaches training accuracy 1.0") {
        hategen::LabeledDataset ds;
        Rng rng(31);
        for (int i = 0; i < 40; ++i) {
            int label = i % 2;
            double cx = label ? 2.0 : -2.0;
            ds.X.push_back({cx + 0.3 * rng.next_normal(), 0.3 * rng.next_normal()});
            ds.y.push_back(label);
        }
        for (auto kind : {hategen::ClassifierKind::logistic_regression,
                          hategen::ClassifierKind::decision_tree}) {
            auto clf = hategen::Classifier::train(kind, ds, {});
            for (size_t i = 0; i < ds.rows(); ++i)
                CHECK((clf.predict_proba(ds.X[i]) >= 0.5) == (ds.y[i] == 1));
        }
    }
    SUBCASE("decision tree honors the depth cap on a deep concept") {
        hategen::LabeledDataset ds;
        for (int i = 0; i < 256; ++i) {
            ds.X.push_back({static_cast<double>(i)});
            ds.y.push_back((i / 2) % 2);  // alternating blocks force deep splits
        }
        hategen::TrainingConfig cfg;
        cfg.max_depth = 5;
        auto clf = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, cfg);
        auto p = std::filesystem::temp_directory_path() / "diffusia_test_tree.json";
        clf.save(p);
        json obj = json::parse(read_file(p));
        CHECK(tree_depth(obj["tree"]) <= 5);
        CHECK(tree_depth(obj["tree"]) >= 1);
    }
    SUBCASE("same config gives identical predictions") {
        auto ds = make_dataset(20, 20, 33, 4);
        for (auto kind : {hategen::ClassifierKind::logistic_regression,
                          hategen::ClassifierKind::decision_tree}) {
            auto a = hategen::Classifier::train(kind, ds, {});
            auto b = hategen::Classifier::train(kind, ds, {});
            for (const auto& row : ds.X)
                CHECK(a.predict_proba(row) == b.predict_proba(row));
        }
    }
    SUBCASE("non-finite features rejected") {
        auto ds = make_dataset(3, 3, 34);
        ds.X[1][0] = std::nan("");
        CHECK_THROWS(
            hategen::Classifier::train(hategen::ClassifierKind::logistic_regression, ds, {}));
    }
    SUBCASE("single-class dataset rejected") {
        auto ds = make_dataset(5, 0, 35);
        CHECK_THROWS(
            hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, {}));
    }
    SUBCASE("logistic loss trace is nonincreasing") {
        auto ds = make_dataset(30, 30, 36, 5);
        auto clf =
            hategen::Classifier::train(hategen::ClassifierKind::logistic_regression, ds, {});
        const auto& trace = clf.loss_trace();
        REQUIRE(trace.size() >= 2);
        for (size_t i = 1; i < trace.size(); ++i)
            CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
}

TEST_CASE("predict_proba") {
    SUBCASE("untrained logistic (zero epochs) outputs 0.5") {
        auto ds = make_dataset(5, 5, 41);
        hategen::TrainingConfig cfg;
        cfg.epochs = 0;
        auto clf =
            hategen::Classifier::train(hategen::ClassifierKind::logistic_regression, ds, cfg);
        CHECK(clf.predict_proba(ds.X[0]) == doctest::Approx(0.5));
    }
    SUBCASE("dimension mismatch errors") {
        auto ds = make_dataset(5, 5, 42);
        auto clf = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, {});
        CHECK_THROWS(clf.predict_proba({1.0}));
    }
    SUBCASE("pure-positive tree leaf predicts label 1 with a smoothing floor") {
        // one feature separates perfectly: left leaf 4 negatives, right 4 positives
        hategen::LabeledDataset ds;
        for (int i = 0; i < 8; ++i) {
            ds.X.push_back({i < 4 ? 0.0 + i * 0.1 : 1.0 + i * 0.1});
            ds.y.push_back(i < 4 ? 0 : 1);
        }
        auto clf = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, {});
        double p_pos = clf.predict_proba({1.2});
        double p_neg = clf.predict_proba({0.1});
        // Laplace: (4+1)/(4+2) and (0+1)/(4+2)
        CHECK(p_pos == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
        CHECK(p_neg == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
        CHECK(p_pos >= 0.5);
    }
    SUBCASE("hand-traced two-level tree path") {
        // feature 0 splits {0,1} groups, feature 1 refines the right group
        hategen::LabeledDataset ds;
        ds.X = {{0.0, 0.0}, {0.0, 1.0}, {0.1, 0.5}, {1.0, 0.0}, {1.0, 0.0},
                {1.0, 1.0}, {1.1, 1.0}, {1.1, 1.1}};
        ds.y = {0, 0, 0, 0, 0, 1, 1, 1};
        hategen::TrainingConfig cfg;
        cfg.class_balanced = false;
        auto clf = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, cfg);
        // oracle: x1 <= 0.5 -> negative region (5 neg, 0 pos after refinement path)
        CHECK(clf.predict_proba({0.0, 0.2}) < 0.5);
        CHECK(clf.predict_proba({1.1, 1.0}) > 0.5);
        // probabilities are Laplace ratios, so strictly inside (0,1)
        for (const auto& row : ds.X) {
            double p = clf.predict_proba(row);
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
}

TEST_CASE("decision tree invariant under monotone feature transforms at training points") {
    auto ds = make_dataset(15, 15, 51, 3);
    auto warped = ds;
    for (auto& row : warped.X) row[1] = std::exp(2.0 * row[1]);  // strictly monotone
    hategen::TrainingConfig cfg;
    auto a = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, ds, cfg);
    auto b = hategen::Classifier::train(hategen::ClassifierKind::decision_tree, warped, cfg);
    for (size_t i = 0; i < ds.rows(); ++i)
        CHECK((a.predict_proba(ds.X[i]) >= 0.5) == (b.predict_proba(warped.X[i]) >= 0.5));
}

TEST_CASE("classifier round-trips through the diffusia-clf-v1 container") {
    namespace fs = std::filesystem;
    auto ds = make_dataset(10, 10, 61, 4);
    for (auto kind : {hategen::ClassifierKind::logistic_regression,
                      hategen::ClassifierKind::decision_tree}) {
        auto clf = hategen::Classifier::train(kind, ds, {});
        auto p = fs::temp_directory_path() / "diffusia_test_clf.json";
        clf.save(p);
        auto loaded = hategen::Classifier::load(p);
        CHECK(loaded.kind() == kind);
        for (const auto& row : ds.X)
            CHECK(loaded.predict_proba(row) == clf.predict_proba(row));
    }
    auto bad = fs::temp_directory_path() / "diffusia_test_notclf.json";
    write_file(bad, "{\"format\": \"something-else\"}\n");
    CHECK_THROWS(hategen::Classifier::load(bad));
}
