#include <doctest.h>

#include <cmath>
#include <cstring>

#include "exptwist/csv.hpp"
#include "exptwist/sampler.hpp"
#include "exptwist/stats.hpp"
#include "test_support.hpp"

using namespace exptwist;
using testing::vec1;

TEST_SUITE("path_sampler") {

TEST_CASE("zero dynamics keep every path at the start point") {
    auto model = make_model("bm", {{"sigma", 0.0}, {"x0", 3.0}});
    const auto bundle = sample_paths(model, TimeGrid(1.0, 20), 8, {42, 0});
    for (const auto& p : bundle.paths) {
        CHECK(p.states.minCoeff() == 3.0);
        CHECK(p.states.maxCoeff() == 3.0);
    }
}

TEST_CASE("unit drift without noise integrates to 1") {
    auto model = make_model("const_drift", {{"mu", 1.0}, {"sigma", 0.0}});
    const auto bundle = sample_paths(model, TimeGrid(1.0, 50), 4, {1, 0});
    for (const auto& p : bundle.paths)
        CHECK(p.terminal()(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jump counts match the Poisson mean") {
    const double lambda = 2.0;
    auto model = testing::poisson_unit(lambda);
    const std::size_t n = 100000;
    std::vector<double> counts(n);
    for_each_path(model, TimeGrid(1.0, 50), n, {7, 0}, {},
                  [&](std::size_t i, const Path& p) {
                      counts[i] = static_cast<double>(p.jump_marks.size());
                  });
    const double m = mean(counts);
    CHECK(std::abs(m - lambda) < 3.0 * std::sqrt(lambda / static_cast<double>(n)));
}

TEST_CASE("seed derivation is deterministic and separates streams") {
    SeedSpec seed{123, 5};
    auto a = derive_path_seed(seed, 17);
    auto b = derive_path_seed(seed, 17);
    CHECK(a == b);
    auto c = derive_path_seed(seed, 18);
    CHECK(a != c);
    auto d = derive_path_seed(SeedSpec{123, 6}, 17);
    CHECK(a != d);
}

TEST_CASE("bundles are byte-identical across runs and thread counts") {
    auto model = make_model("cpg", {{"lambda", 1.5}, {"jump_std", 0.5},
                                    {"sigma", 1.0}});
    const TimeGrid grid(1.0, 40);
    const SeedSpec seed{99, 1};

    auto run = [&](unsigned threads) {
        std::vector<Mat> states(64);
        for_each_path(model, grid, 64, seed, {},
                      [&](std::size_t i, const Path& p) { states[i] = p.states; },
                      threads);
        return states;
    };
    const auto one = run(1);
    const auto four = run(4);
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        REQUIRE(one[i].size() == four[i].size());
        CHECK(std::memcmp(one[i].data(), four[i].data(),
                          sizeof(double) * static_cast<std::size_t>(one[i].size())) == 0);
    }
}

TEST_CASE("terminal law of driftless unit-vol paths matches (0, T)") {
    auto model = testing::brownian();
    const std::size_t n = 100000;
    const double T = 1.0;
    std::vector<double> xt(n);
    for_each_path(model, TimeGrid(T, 50), n, {2024, 0}, {},
                  [&](std::size_t i, const Path& p) { xt[i] = p.terminal()(0); });
    const double m = mean(xt);
    const double v = variance(xt);
    const double se_mean = std::sqrt(T / static_cast<double>(n));
    const double se_var = T * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(m - 0.0) < 4.0 * se_mean);
    CHECK(std::abs(v - T) < 4.0 * se_var);
}

TEST_CASE("thinned jump counts follow the Poisson law (chi-square)") {
    const double lambda = 2.0, T = 1.0;
    auto model = testing::poisson_unit(lambda);
    const std::size_t n = 100000;
    std::vector<double> counts(n);
    for_each_path(model, TimeGrid(T, 100), n, {515, 3}, {},
                  [&](std::size_t i, const Path& p) {
                      counts[i] = static_cast<double>(p.jump_marks.size());
                  });

    // bins 0..8 plus tail
    const int k_max = 9;
    std::vector<double> observed(k_max + 1, 0.0);
    for (double c : counts) {
        const int k = static_cast<int>(c);
        observed[static_cast<std::size_t>(std::min(k, k_max))] += 1.0;
    }
    std::vector<double> expected(k_max + 1, 0.0);
    double pmf = std::exp(-lambda * T);
    double tail = 1.0;
    for (int k = 0; k < k_max; ++k) {
        expected[static_cast<std::size_t>(k)] = pmf * static_cast<double>(n);
        tail -= pmf;
        pmf *= lambda * T / static_cast<double>(k + 1);
    }
    expected[k_max] = tail * static_cast<double>(n);

    double stat = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        stat += (observed[idx] - expected[idx]) * (observed[idx] - expected[idx]) /
                expected[idx];
    }
    const double p_value = chi_square_sf(stat, k_max);
    CHECK(p_value > 0.001);
}

TEST_CASE("exploding drift flags divergence and keeps going") {
    ModelSpec model;
    model.dim = 1;
    model.drift = [](double, const Vec& x) { return Vec(1e7 * x); };
    model.diffusion = [](double, const Vec&) { return Mat::Zero(1, 1); };
    model.initial_law = PointMass{vec1(1.0)};
    const auto bundle = sample_paths(model, TimeGrid(1.0, 20), 5, {3, 0});
    CHECK(bundle.divergence_count() == 5);
    for (const auto& p : bundle.paths) CHECK(p.states.allFinite());
}

TEST_CASE("path dump has one row per (path, time)") {
    auto model = testing::brownian();
    const auto bundle = sample_paths(model, TimeGrid(1.0, 4), 3, {11, 0});
    const auto file = std::filesystem::temp_directory_path() / "exptwist_paths.csv";
    dump_paths_csv(bundle, file);
    const auto table = csv::read_file(file);
    CHECK(table.columns == std::vector<std::string>{"path_id", "t", "x_1"});
    CHECK(table.rows.size() == 3 * 5);
    std::filesystem::remove(file);
}

}  // TEST_SUITE
