#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lte/error.hpp"
#include "lte/kernels.hpp"
#include "lte/rng.hpp"
#include "lte/svm.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace lte;

namespace {

std::vector<FeatureVector> random_points(int n, int dim, Rng& rng) {
    std::vector<FeatureVector> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) {
        p.resize(static_cast<std::size_t>(dim));
        for (double& v : p) v = 2.0 * rng.next_double() - 1.0;
    }
    return pts;
}

Matrix linear_gram(const std::vector<FeatureVector>& pts) {
    KernelDescriptor lin{KernelKind::linear, 0.0, 0.0};
    return gram(lin, pts, pts).entries;
}

struct Objectives {
    double primal = 0.0;
    double dual = 0.0;
};

Objectives svm_objectives(const BinarySVM& svm, const Matrix& g) {
    const std::size_t n = svm.alpha.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            quad += svm.alpha[i] * svm.alpha[j] * svm.y[i] * svm.y[j] *
                    g(svm.sample_indices[i], svm.sample_indices[j]);
    double alpha_sum = 0.0;
    for (double a : svm.alpha) alpha_sum += a;

    double hinge = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double ft = svm.decision(g, svm.sample_indices[t]);
        hinge += std::max(0.0, 1.0 - svm.y[t] * ft);
    }
    return {0.5 * quad + svm.c_reg * hinge, alpha_sum - 0.5 * quad};
}

void check_kkt(const BinarySVM& svm, const Matrix& g, double tol) {
    double alpha_dot_y = 0.0;
    for (std::size_t t = 0; t < svm.alpha.size(); ++t) {
        const double a = svm.alpha[t];
        REQUIRE(a >= 0.0);
        REQUIRE(a <= svm.c_reg);
        alpha_dot_y += a * svm.y[t];
        const double margin = svm.y[t] * svm.decision(g, svm.sample_indices[t]);
        if (a == 0.0)
            CHECK(margin >= 1.0 - tol);
        else if (a == svm.c_reg)
            CHECK(margin <= 1.0 + tol);
        else
            CHECK(std::abs(margin - 1.0) <= tol);
    }
    CHECK(std::abs(alpha_dot_y) <= 1e-6);
}

} // namespace

TEST_CASE("two-point problem has the analytic solution") {
    // 1-D points 0 (y=-1) and 2 (y=+1) under the linear kernel.
    Matrix g(2, 2);
    g(1, 1) = 4.0;
    BinarySVM svm = train_binary_svm(g, {-1, +1}, 100.0, 1e-6);

    REQUIRE(svm.alpha.size() == 2);
    CHECK(std::abs(svm.alpha[0] - 0.5) <= 1e-6);
    CHECK(std::abs(svm.alpha[1] - 0.5) <= 1e-6);
    CHECK(std::abs(svm.bias - (-1.0)) <= 1e-6);

    // Decision boundary sits at x=1: f(x) = 0.5*x - 1.
    Matrix probe(2, 2);
    probe(0, 0) = 0.0; // x=0 against train points {0, 2}
    probe(0, 1) = 0.0;
    probe(1, 0) = 0.0; // x=2
    probe(1, 1) = 4.0;
    CHECK(svm.decision(probe, 0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(svm.decision(probe, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("separable blobs are classified perfectly in training") {
    Rng rng(3);
    std::vector<FeatureVector> pts;
    std::vector<int> y;
    for (int i = 0; i < 12; ++i) {
        pts.push_back({5.0 + rng.next_normal(), 5.0 + rng.next_normal()});
        y.push_back(+1);
        pts.push_back({-5.0 + rng.next_normal(), -5.0 + rng.next_normal()});
        y.push_back(-1);
    }
    Matrix g = linear_gram(pts);
    BinarySVM svm = train_binary_svm(g, y, 10.0, 1e-3);
    for (std::size_t t = 0; t < pts.size(); ++t)
        CHECK((svm.decision(g, t) > 0 ? +1 : -1) == y[t]);
}

TEST_CASE("KKT conditions and duality gap hold on random problems") {
    Rng rng(7);
    const double c_grid[3] = {0.5, 1.0, 10.0};
    for (int t = 0; t < 25; ++t) {
        const int n = 6 + static_cast<int>(rng.next_below(10));
        auto pts = random_points(n, 3, rng);
        std::vector<int> y(static_cast<std::size_t>(n));
        do {
            for (auto& v : y) v = rng.next_below(2) == 0 ? -1 : +1;
        } while (std::count(y.begin(), y.end(), +1) == 0 ||
                 std::count(y.begin(), y.end(), -1) == 0);

        Matrix g = linear_gram(pts);
        const double c_reg = c_grid[t % 3];
        BinarySVM svm = train_binary_svm(g, y, c_reg, 1e-6);

        check_kkt(svm, g, 1e-3);
        auto obj = svm_objectives(svm, g);
        CHECK(obj.primal - obj.dual <= 1e-3);
        CHECK(obj.primal - obj.dual >= -1e-9); // weak duality, up to rounding
    }
}

TEST_CASE("scaling the gram and inversely scaling C keeps predictions") {
    Rng rng(11);
    auto pts = random_points(14, 3, rng);
    std::vector<int> y;
    for (auto& p : pts) {
        // Separate along the first coordinate so every decision value is
        // bounded away from 0 and the sign comparison is stable.
        p[0] = (p[0] >= 0 ? 1.0 : -1.0) * (0.3 + 0.7 * std::abs(p[0]));
        y.push_back(p[0] > 0 ? +1 : -1);
    }

    Matrix g = linear_gram(pts);

    const double scale = 4.0;
    Matrix gs = g;
    for (double& v : gs.data()) v *= scale;

    BinarySVM a = train_binary_svm(g, y, 8.0, 1e-6);
    BinarySVM b = train_binary_svm(gs, y, 8.0 / scale, 1e-6);
    for (std::size_t t = 0; t < pts.size(); ++t) {
        const int pa = a.decision(g, t) > 0 ? +1 : -1;
        const int pb = b.decision(gs, t) > 0 ? +1 : -1;
        CHECK(pa == pb);
    }
}

TEST_CASE("degenerate inputs are rejected") {
    Matrix g(3, 3);
    CHECK_THROWS_AS(train_binary_svm(g, {1, 1, 1}, 1.0, 1e-3), ValidationError);
    CHECK_THROWS_AS(train_binary_svm(g, {1, -1}, 1.0, 1e-3), ValidationError);

    Matrix ns(2, 2);
    ns(0, 1) = 0.5; // asymmetric
    CHECK_THROWS_AS(train_binary_svm(ns, {-1, 1}, 1.0, 1e-3), ValidationError);

    CHECK_THROWS_AS(train_binary_svm(Matrix(2, 2), {-1, 1}, 0.0, 1e-3), ValidationError);
}

TEST_CASE("one-vs-one voting classifies three separable blobs") {
    Rng rng(13);
    std::vector<FeatureVector> pts;
    std::vector<int> labels;
    const double centers[3][2] = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 8; ++i) {
            pts.push_back({centers[c][0] + 0.5 * rng.next_normal(),
                           centers[c][1] + 0.5 * rng.next_normal()});
            labels.push_back(c + 1);
        }

    Matrix g = linear_gram(pts);
    OvOClassifier clf = train_ovo(g, labels, 10.0, 1e-3);
    CHECK(clf.classes == std::vector<int>{1, 2, 3});
    CHECK(clf.machines.size() == 3);
    CHECK(clf.machines[0].neg_class == 1);
    CHECK(clf.machines[0].pos_class == 2);
    CHECK(clf.machines[2].neg_class == 2);
    CHECK(clf.machines[2].pos_class == 3);

    auto pred = predict_ovo(clf, g);
    CHECK(pred == labels);

    // Voting must not depend on the order machines are stored in.
    OvOClassifier shuffled = clf;
    std::swap(shuffled.machines[0], shuffled.machines[2]);
    CHECK(predict_ovo(shuffled, g) == labels);
    std::reverse(shuffled.machines.begin(), shuffled.machines.end());
    CHECK(predict_ovo(shuffled, g) == labels);
}

TEST_CASE("tuning on separable data reaches high accuracy and prefers small C") {
    Dataset data = testutil::make_blob_dataset(3, 4, 8, 2, 20.0, 0.5, 17);
    std::vector<FeatureVector> rows;
    std::vector<int> labels;
    for (const auto& sn : data.snippets) {
        rows.push_back(pool_average(sn.segments));
        labels.push_back(sn.label);
    }

    TuneResult result = tune_hyperparameters({rows}, labels, KernelKind::linear,
                                             {0.1, 1.0, 10.0}, {}, 4, 1e-3, 19);
    CHECK(result.accuracy >= 0.95);
    REQUIRE(result.table.size() == 3);
    // Fully separable: every C ties at the top, so the smallest wins.
    CHECK(result.c_reg == 0.1);
    CHECK(result.gamma == 0.0);

    CHECK_THROWS_AS(tune_hyperparameters({rows}, labels, KernelKind::linear, {1.0},
                                         {0.5}, 4, 1e-3, 19),
                    ValidationError); // gamma grid is rbf-only
}

TEST_CASE("svm model serialization round-trips predictions") {
    testutil::TempDir tmp("lte_svm");
    Dataset data = testutil::make_blob_dataset(3, 4, 6, 2, 15.0, 1.0, 23);
    std::vector<FeatureVector> train_rows, test_rows;
    std::vector<int> train_labels;
    for (const auto& sn : data.snippets) {
        auto pooled = pool_average(sn.segments);
        for (double& v : pooled) v += 5.0; // chi2 inputs must be nonnegative
        if (train_rows.size() <= 2 * test_rows.size()) {
            train_rows.push_back(pooled);
            train_labels.push_back(sn.label);
        } else {
            test_rows.push_back(pooled);
        }
    }

    const double mean = mean_chi2(train_rows);
    KernelDescriptor chi{KernelKind::chi2, mean, 0.0};
    Matrix g = gram(chi, train_rows, train_rows).entries;

    SvmModel model;
    model.classifier = train_ovo(g, train_labels, 5.0, 1e-4);
    model.classifier.descriptor = chi;
    model.channel_rows = {train_rows};
    model.channel_mean_distances = {mean};
    model.label_names = data.label_names;

    save_svm_model(model, tmp.file("model.json"));
    SvmModel loaded = load_svm_model(tmp.file("model.json"));

    CHECK(loaded.label_names == model.label_names);
    CHECK(loaded.classifier.classes == model.classifier.classes);
    REQUIRE(loaded.channel_rows.size() == 1);

    GramMatrix tg_orig = model_test_gram(model, {test_rows});
    GramMatrix tg_back = model_test_gram(loaded, {test_rows});
    auto pred_orig = predict_ovo(model.classifier, tg_orig.entries);
    auto pred_back = predict_ovo(loaded.classifier, tg_back.entries);
    CHECK(pred_orig == pred_back);
    for (std::size_t i = 0; i < tg_orig.entries.rows(); ++i)
        for (std::size_t j = 0; j < tg_orig.entries.cols(); ++j)
            CHECK(tg_back.entries(i, j) ==
                  doctest::Approx(tg_orig.entries(i, j)).epsilon(1e-12));
}
