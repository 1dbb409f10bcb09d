#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lte/error.hpp"
#include "lte/kernels.hpp"
#include "lte/linalg.hpp"
#include "lte/rng.hpp"
#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <vector>

using namespace lte;

namespace {

std::vector<FeatureVector> random_nonneg(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureVector> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) {
        r.resize(static_cast<std::size_t>(dim));
        for (double& v : r) v = rng.next_double();
    }
    return rows;
}

double min_eigenvalue(const Matrix& m) {
    auto eig = jacobi_eigen(m);
    return eig.values.back();
}

} // namespace

TEST_CASE("chi2 distance matches the half-convention formula") {
    FeatureVector u = {0.2, 0.5, 0.0};
    FeatureVector v = {0.4, 0.1, 0.0};
    // 0.5 * ((0.04/0.6) + (0.16/0.6) + 0) = 0.5 * (0.2/0.6)
    CHECK(chi2_distance(u, v) == doctest::Approx(0.5 * 0.2 / 0.6).epsilon(1e-12));
    CHECK(chi2_distance(u, u) == 0.0);

    // 0/0 coordinates contribute nothing.
    FeatureVector z1 = {0.0, 1.0};
    FeatureVector z2 = {0.0, 1.0};
    CHECK(chi2_distance(z1, z2) == 0.0);

    CHECK_THROWS_AS(chi2_distance({-0.1, 0.2}, {0.1, 0.2}), ValidationError);
}

TEST_CASE("chi2 distance is positive definite on distinct positive vectors") {
    Rng rng(7);
    for (int t = 0; t < 25; ++t) {
        FeatureVector u(4), v(4);
        for (int d = 0; d < 4; ++d) {
            u[d] = 0.01 + rng.next_double();
            v[d] = 0.01 + rng.next_double();
        }
        CHECK(chi2_distance(u, v) > 0.0);
        CHECK(chi2_distance(u, v) == chi2_distance(v, u));
        CHECK(chi2_distance(u, u) == 0.0);
    }
}

TEST_CASE("linear and hist kernels match their definitions") {
    FeatureVector u = {1.0, 2.0, 3.0};
    FeatureVector v = {0.5, 4.0, 1.0};
    KernelDescriptor lin{KernelKind::linear, 0.0, 0.0};
    auto g = gram(lin, {u, v}, {u, v});
    CHECK(g.entries(0, 0) == doctest::Approx(14.0));             // <u,u>
    CHECK(g.entries(0, 1) == doctest::Approx(0.5 + 8.0 + 3.0)); // <u,v>
    CHECK(g.entries(1, 0) == g.entries(0, 1));

    KernelDescriptor hist{KernelKind::hist, 0.0, 0.0};
    auto h = gram(hist, {u, v}, {u, v});
    CHECK(h.entries(0, 0) == doctest::Approx(6.0)); // ||u||_1
    CHECK(h.entries(0, 1) == doctest::Approx(0.5 + 2.0 + 1.0));
    CHECK(h.entries(1, 1) == doctest::Approx(5.5));
}

TEST_CASE("rbf and chi2 grams have unit diagonal and are symmetric") {
    auto rows = random_nonneg(12, 5, 11);

    KernelDescriptor rbf{KernelKind::rbf, 0.0, default_rbf_gamma(rows)};
    auto gr = gram(rbf, rows, rows);
    KernelDescriptor chi{KernelKind::chi2, mean_chi2(rows), 0.0};
    auto gc = gram(chi, rows, rows);

    for (const auto* g : {&gr, &gc}) {
        CHECK(g->entries.is_symmetric());
        for (std::size_t i = 0; i < g->entries.rows(); ++i)
            CHECK(g->entries(i, i) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("rbf chi2 and fusion grams are positive semidefinite") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto rows = random_nonneg(15, 6, seed);

        KernelDescriptor rbf{KernelKind::rbf, 0.0, default_rbf_gamma(rows)};
        CHECK(min_eigenvalue(gram(rbf, rows, rows).entries) >= -1e-8);

        KernelDescriptor chi{KernelKind::chi2, mean_chi2(rows), 0.0};
        CHECK(min_eigenvalue(gram(chi, rows, rows).entries) >= -1e-8);

        auto scaled = rows;
        for (auto& r : scaled)
            for (double& v : r) v = v * 0.5 + 0.1;
        std::vector<Channel> channels = {{rows, rows, mean_chi2(rows)},
                                         {scaled, scaled, mean_chi2(scaled)}};
        CHECK(min_eigenvalue(fusion_gram(channels).entries) >= -1e-8);
    }
}

TEST_CASE("single-channel fusion equals the chi2 gram exactly") {
    auto rows = random_nonneg(10, 4, 17);
    const double mean = mean_chi2(rows);

    auto fused = fusion_gram({{rows, rows, mean}});
    KernelDescriptor chi{KernelKind::chi2, mean, 0.0};
    auto direct = gram(chi, rows, rows);

    REQUIRE(fused.entries.rows() == direct.entries.rows());
    for (std::size_t i = 0; i < fused.entries.rows(); ++i)
        for (std::size_t j = 0; j < fused.entries.cols(); ++j)
            CHECK(std::abs(fused.entries(i, j) - direct.entries(i, j)) <= 1e-12);
}

TEST_CASE("fusion is multiplicative across channels") {
    auto a = random_nonneg(8, 4, 19);
    auto b = random_nonneg(8, 5, 23);
    const double ma = mean_chi2(a);
    const double mb = mean_chi2(b);

    auto fused = fusion_gram({{a, a, ma}, {b, b, mb}});
    auto ka = fusion_gram({{a, a, ma}});
    auto kb = fusion_gram({{b, b, mb}});

    for (std::size_t i = 0; i < fused.entries.rows(); ++i)
        for (std::size_t j = 0; j < fused.entries.cols(); ++j)
            CHECK(fused.entries(i, j) ==
                  doctest::Approx(ka.entries(i, j) * kb.entries(i, j)).epsilon(1e-12));

    // Identical channels with equal normalizers square the single-channel
    // entries: exp(-2D/mean) = exp(-D/mean)^2.
    auto twice = fusion_gram({{a, a, ma}, {a, a, ma}});
    for (std::size_t i = 0; i < twice.entries.rows(); ++i)
        for (std::size_t j = 0; j < twice.entries.cols(); ++j)
            CHECK(twice.entries(i, j) ==
                  doctest::Approx(ka.entries(i, j) * ka.entries(i, j)).epsilon(1e-12));

    for (std::size_t i = 0; i < fused.entries.rows(); ++i)
        CHECK(fused.entries(i, i) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gram validates its inputs") {
    auto rows = random_nonneg(4, 3, 29);

    KernelDescriptor chi_no_mean{KernelKind::chi2, 0.0, 0.0};
    CHECK_THROWS_AS(gram(chi_no_mean, rows, rows), ValidationError);

    KernelDescriptor rbf_no_gamma{KernelKind::rbf, 0.0, 0.0};
    CHECK_THROWS_AS(gram(rbf_no_gamma, rows, rows), ValidationError);

    KernelDescriptor fusion_kind{KernelKind::fusion, 1.0, 0.0};
    CHECK_THROWS_AS(gram(fusion_kind, rows, rows), ValidationError);

    auto negative = rows;
    negative[0][0] = -0.5;
    KernelDescriptor chi{KernelKind::chi2, 1.0, 0.0};
    CHECK_THROWS_AS(gram(chi, negative, rows), ValidationError);
    KernelDescriptor hist{KernelKind::hist, 0.0, 0.0};
    CHECK_THROWS_AS(gram(hist, negative, rows), ValidationError);

    auto ragged = rows;
    ragged[1].push_back(0.0);
    KernelDescriptor lin{KernelKind::linear, 0.0, 0.0};
    CHECK_THROWS_AS(gram(lin, ragged, rows), ValidationError);
}

TEST_CASE("mean_chi2 and default_rbf_gamma guard their preconditions") {
    CHECK_THROWS_AS(mean_chi2({{1.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(mean_chi2({{1.0, 2.0}, {1.0, 2.0}}), ValidationError);

    auto rows = random_nonneg(6, 3, 31);
    CHECK(mean_chi2(rows) > 0.0);
    CHECK(default_rbf_gamma(rows) > 0.0);

    // No variance: falls back to 1/dim.
    std::vector<FeatureVector> flat(4, FeatureVector{2.0, 2.0, 2.0, 2.0});
    CHECK(default_rbf_gamma(flat) == doctest::Approx(0.25));
}

TEST_CASE("kernel kind names round-trip") {
    for (const char* name : {"linear", "chi2", "hist", "rbf", "fusion"})
        CHECK(to_string(kernel_kind_from_string(name)) == name);
    CHECK_THROWS_AS(kernel_kind_from_string("cubic"), ValidationError);
}

TEST_CASE("gram CSV export names rows and columns") {
    testutil::TempDir tmp("lte_gram");
    KernelDescriptor lin{KernelKind::linear, 0.0, 0.0};
    auto g = gram(lin, {{1.0, 0.0}, {0.0, 2.0}}, {{1.0, 0.0}});
    g.row_ids = {"ra", "rb"};
    g.col_ids = {"ca"};
    save_gram(g, tmp.file("g.csv"));

    std::ifstream in(tmp.file("g.csv"));
    std::string header, row1, row2;
    REQUIRE(std::getline(in, header));
    REQUIRE(std::getline(in, row1));
    REQUIRE(std::getline(in, row2));
    CHECK(header == "id,ca");
    CHECK(row1 == "ra,1");
    CHECK(row2 == "rb,0");
}
