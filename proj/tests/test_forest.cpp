#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lte/error.hpp"
#include "lte/forest.hpp"
#include "lte/rng.hpp"
#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace lte;

namespace {

/// Classes occupy disjoint 1-D intervals: class c in [10c, 10c + 1].
SampleSet interval_samples(int num_classes, int per_class, std::uint64_t seed) {
    Rng rng(seed);
    SampleSet s;
    for (int c = 1; c <= num_classes; ++c) {
        s.restricted_labels.push_back(c);
        for (int i = 0; i < per_class; ++i) {
            s.features.push_back({10.0 * c + rng.next_double()});
            s.labels.push_back(c);
        }
    }
    return s;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("predict_proba is a probability simplex point") {
    Dataset data = testutil::make_blob_dataset(4, 3, 6, 3, 8.0, 2.0, 31);
    ForestConfig cfg;
    cfg.num_trees = 25;
    cfg.seed = 9;
    RandomForest forest = train_forest(segments_of(data), cfg);

    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        FeatureVector x = {12.0 * rng.next_double(), 12.0 * rng.next_double(),
                           12.0 * rng.next_double()};
        auto p = forest.predict_proba(x);
        REQUIRE(p.size() == 4);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("disjoint per-class intervals give training accuracy 1") {
    SampleSet samples = interval_samples(5, 12, 41);
    ForestConfig cfg;
    cfg.num_trees = 30;
    cfg.seed = 3;
    RandomForest forest = train_forest(samples, cfg);
    for (std::size_t i = 0; i < samples.size(); ++i)
        CHECK(forest.predict_class(samples.features[i]) == samples.labels[i]);
}

TEST_CASE("pure-class training set predicts that class everywhere") {
    SampleSet samples;
    samples.restricted_labels = {3};
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        samples.features.push_back({rng.next_double(), rng.next_double()});
        samples.labels.push_back(3);
    }
    ForestConfig cfg;
    cfg.num_trees = 5;
    RandomForest forest = train_forest(samples, cfg);
    for (double x : {-100.0, 0.0, 0.5, 100.0}) {
        CHECK(forest.predict_class({x, x}) == 3);
        CHECK(forest.predict_proba({x, x})[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("identical data, config and seed give identical serialized forests") {
    testutil::TempDir tmp("lte_forest");
    SampleSet samples = interval_samples(3, 8, 13);
    ForestConfig cfg;
    cfg.num_trees = 15;
    cfg.seed = 1234;

    RandomForest a = train_forest(samples, cfg);
    RandomForest b = train_forest(samples, cfg);
    save_forest(a, tmp.file("a.json"));
    save_forest(b, tmp.file("b.json"));
    CHECK(file_bytes(tmp.file("a.json")) == file_bytes(tmp.file("b.json")));

    cfg.seed = 1235;
    RandomForest c = train_forest(samples, cfg);
    save_forest(c, tmp.file("c.json"));
    CHECK(file_bytes(tmp.file("a.json")) != file_bytes(tmp.file("c.json")));
}

TEST_CASE("save then load preserves predictions") {
    testutil::TempDir tmp("lte_forest");
    Dataset data = testutil::make_blob_dataset(3, 4, 5, 3, 8.0, 1.5, 19);
    ForestConfig cfg;
    cfg.num_trees = 12;
    cfg.seed = 8;
    RandomForest forest = train_forest(segments_of(data), cfg);
    save_forest(forest, tmp.file("f.json"));
    RandomForest back = load_forest(tmp.file("f.json"));

    CHECK(back.class_ids == forest.class_ids);
    CHECK(back.feature_dim == forest.feature_dim);
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        FeatureVector x = {10 * rng.next_double(), 10 * rng.next_double(),
                           10 * rng.next_double(), 10 * rng.next_double()};
        CHECK(back.predict_proba(x) == forest.predict_proba(x));
    }
}

TEST_CASE("forest config is validated") {
    SampleSet samples = interval_samples(2, 4, 1);
    ForestConfig cfg;

    cfg.num_trees = 0;
    CHECK_THROWS_AS(train_forest(samples, cfg), ValidationError);

    cfg = ForestConfig{};
    cfg.min_leaf = 0;
    CHECK_THROWS_AS(train_forest(samples, cfg), ValidationError);

    cfg = ForestConfig{};
    cfg.features_per_split = 2; // samples have dimension 1: clamped to M
    RandomForest forest = train_forest(samples, cfg);
    CHECK(forest.config.features_per_split == 1);

    cfg = ForestConfig{};
    cfg.num_trees = 4;
    RandomForest resolved = train_forest(samples, cfg);
    CHECK(resolved.config.features_per_split == 1); // ceil(sqrt(1))
}
