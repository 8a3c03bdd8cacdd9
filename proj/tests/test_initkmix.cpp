#include "doctest.h"
#include "kmix/initkmix.hpp"
#include "oracles.hpp"

using oracle::make_dataset;

TEST_CASE("std_normal_quantile: frozen oracle values and symmetry") {
    CHECK(kmix::std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    // frozen from the series-CDF bisection oracle
    CHECK(kmix::std_normal_quantile(1.0 / 3.0) == doctest::Approx(-0.43072729929545756).epsilon(1e-9));
    CHECK(kmix::std_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK_THROWS_AS(kmix::std_normal_quantile(0.0), kmix::error);
    CHECK_THROWS_AS(kmix::std_normal_quantile(1.0), kmix::error);
    CHECK_THROWS_AS(kmix::std_normal_quantile(-0.2), kmix::error);
}

TEST_CASE("std_normal_quantile agrees with the independent oracle to 1e-9") {
    for (int i = 1; i <= 999; i += 7) {
        double p = i / 1000.0;
        double z = kmix::std_normal_quantile(p);
        double z_oracle = oracle::normal_quantile_bisect(p);
        CHECK(std::abs(z - z_oracle) <= 1e-9);
    }
    // far tails
    for (double p : {1e-8, 1e-6, 1e-4, 1.0 - 1e-4, 1.0 - 1e-6}) {
        double z = kmix::std_normal_quantile(p);
        CHECK(std::abs(static_cast<double>(oracle::normal_cdf_series(z)) - p) <= 1e-12 * std::max(1.0, std::abs(p)));
    }
}

TEST_CASE("numeric seed partition: boundary placement and equal-mass ranges") {
    // k=2 splits at the mean; {-1, 0, 1} puts the boundary value upper
    auto ds = make_dataset({{-1.0, 0.0, 1.0}}, {}, {}, false);
    auto part = kmix::numeric_seed_partition(ds, 0, 2);
    CHECK(part.labels == std::vector<int>{0, 1, 1});

    // k=3 boundaries sit at mu +- 0.4307273*sigma
    auto ds2 = make_dataset({{-2.0, -0.5, -0.1, 0.1, 0.5, 2.0}}, {}, {}, false);
    auto part3 = kmix::numeric_seed_partition(ds2, 0, 3);
    CHECK(part3.k == 3);
    {
        const auto& col = ds2.numeric_cols[0];
        double mu = kmix::detail::stable_mean(col);
        std::vector<double> sq;
        for (double v : col) sq.push_back((v - mu) * (v - mu));
        double sigma = std::sqrt(kmix::detail::stable_sum(sq) / col.size());
        double lo = mu - 0.43072729929545756 * sigma;
        double hi = mu + 0.43072729929545756 * sigma;
        for (std::size_t i = 0; i < col.size(); ++i) {
            int expected = col[i] < lo ? 0 : (col[i] < hi ? 1 : 2);
            CHECK(part3.labels[i] == expected);
        }
    }

    // per-range standard-normal mass is 1/k (integrated with the oracle CDF)
    for (int k = 2; k <= 10; ++k) {
        std::vector<double> bounds;
        for (int j = 1; j < k; ++j) bounds.push_back(kmix::std_normal_quantile(static_cast<double>(j) / k));
        double prev = 0.0;
        for (std::size_t j = 0; j < bounds.size(); ++j) {
            double mass = static_cast<double>(oracle::normal_cdf_series(bounds[j])) - prev;
            CHECK(std::abs(mass - 1.0 / k) <= 1e-8);
            prev += mass;
        }
        CHECK(std::abs((1.0 - prev) - 1.0 / k) <= 1e-8);
    }

    auto flat = make_dataset({{3.0, 3.0, 3.0}}, {}, {}, false);
    CHECK_THROWS_AS(kmix::numeric_seed_partition(flat, 0, 2), kmix::error);
}

TEST_CASE("categorical seed partition groups by value code") {
    auto ds = make_dataset({}, {{1, 0, 1, 2, 0}});
    auto part = kmix::categorical_seed_partition(ds, 0);
    CHECK(part.k == 3);
    CHECK(part.labels == std::vector<int>{1, 0, 1, 2, 0});

    auto single = make_dataset({}, {{0, 0, 0}});
    auto p1 = kmix::categorical_seed_partition(single, 0);
    CHECK(p1.k == 1);
    CHECK(p1.cluster_sizes()[0] == 3);
}

namespace {

kmix::Dataset seeded_mixed_dataset(std::uint64_t seed, int n) {
    std::uint64_t state = seed;
    auto rnd = [&](std::uint64_t bound) { return kmix::detail::splitmix64(state) % bound; };
    std::vector<std::vector<double>> nums(2);
    std::vector<std::vector<int>> cats(2);
    std::vector<int> truth;
    for (int i = 0; i < n; ++i) {
        int cls = static_cast<int>(rnd(2));
        double base = cls == 0 ? 0.2 : 0.8;
        nums[0].push_back(base + static_cast<double>(rnd(997)) / 10000.0);
        nums[1].push_back(base + static_cast<double>(rnd(991)) / 10000.0);
        cats[0].push_back(cls == 0 ? static_cast<int>(rnd(2)) : 1 + static_cast<int>(rnd(2)));
        cats[1].push_back(static_cast<int>(rnd(3)));
        truth.push_back(cls);
    }
    return make_dataset(nums, cats, truth, true);
}

}  // namespace

TEST_CASE("run_initkmix: deterministic, k non-empty clusters, all attributes used") {
    auto ds = seeded_mixed_dataset(7, 60);
    auto model = kmix::build_model(ds, 4);
    auto o1 = kmix::run_initkmix(ds, model, 2);
    auto o2 = kmix::run_initkmix(ds, model, 2);
    CHECK(o1.consensus.labels == o2.consensus.labels);
    CHECK(o1.chosen == o2.chosen);
    CHECK(o1.anmi_hgpa == o2.anmi_hgpa);
    CHECK(o1.runs.size() == 4);
    auto sizes = o1.consensus.cluster_sizes();
    REQUIRE(sizes.size() == 2);
    for (auto s : sizes) CHECK(s > 0);
    // chosen method is the argmax of the two scores, ties to HGPA
    if (o1.anmi_hgpa >= o1.anmi_mcla)
        CHECK(o1.chosen == kmix::ConsensusMethod::hgpa);
    else
        CHECK(o1.chosen == kmix::ConsensusMethod::mcla);
}

TEST_CASE("run_initkmix: unanimous attribute structure reproduces the planted split") {
    // every attribute separates the same two groups
    std::vector<std::vector<double>> nums{{0.1, 0.12, 0.11, 0.9, 0.92, 0.91}};
    std::vector<std::vector<int>> cats{{0, 0, 0, 1, 1, 1}, {1, 1, 1, 0, 0, 0}};
    auto ds = make_dataset(nums, cats, {0, 0, 0, 1, 1, 1}, true);
    auto model = kmix::build_model(ds, 2);
    auto out = kmix::run_initkmix(ds, model, 2);
    CHECK(kmix::same_set_partition(out.consensus.labels, {0, 0, 0, 1, 1, 1}));
    CHECK(out.anmi_hgpa == doctest::Approx(1.0));
}

TEST_CASE("run_initkmix: constant numeric attributes are skipped, not fatal") {
    std::vector<std::vector<double>> nums{{0.5, 0.5, 0.5, 0.5}, {0.1, 0.2, 0.8, 0.9}};
    std::vector<std::vector<int>> cats{{0, 0, 1, 1}};
    auto ds = make_dataset(nums, cats, {}, true);
    auto model = kmix::build_model(ds, 2);
    auto out = kmix::run_initkmix(ds, model, 2);
    CHECK(out.skipped == std::vector<std::string>{"n0"});
    CHECK(out.runs.size() == 2);

    // all attributes unusable -> error
    std::vector<std::vector<double>> flat{{0.5, 0.5, 0.5}, {0.4, 0.4, 0.4}};
    auto ds2 = make_dataset(flat, {}, {}, true);
    auto model2 = kmix::build_model(ds2, 2);
    CHECK_THROWS_AS(kmix::run_initkmix(ds2, model2, 2), kmix::error);
}

TEST_CASE("run_initkmix: row permutation yields the permuted labels up to relabeling") {
    auto ds = seeded_mixed_dataset(99, 48);
    auto model = kmix::build_model(ds, 4);
    auto out = kmix::run_initkmix(ds, model, 2);

    // fixed permutation
    std::uint64_t state = 1234;
    std::vector<std::size_t> perm(ds.n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[kmix::detail::splitmix64(state) % i]);

    std::vector<std::vector<double>> pnums(2);
    std::vector<std::vector<int>> pcats(2);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        pnums[0].push_back(ds.numeric_cols[0][perm[i]]);
        pnums[1].push_back(ds.numeric_cols[1][perm[i]]);
        pcats[0].push_back(ds.cat_cols[0][perm[i]]);
        pcats[1].push_back(ds.cat_cols[1][perm[i]]);
    }
    auto pds = make_dataset(pnums, pcats, {}, true);
    auto pmodel = kmix::build_model(pds, 4);
    auto pout = kmix::run_initkmix(pds, pmodel, 2);

    // un-permute and compare as set partitions
    std::vector<int> unperm(ds.n);
    for (std::size_t i = 0; i < perm.size(); ++i) unperm[perm[i]] = pout.consensus.labels[i];
    CHECK(kmix::same_set_partition(unperm, out.consensus.labels));
}

TEST_CASE("run_initkmix parameter validation") {
    auto ds = seeded_mixed_dataset(3, 20);
    auto model = kmix::build_model(ds, 4);
    CHECK_THROWS_AS(kmix::run_initkmix(ds, model, 1), kmix::error);
    CHECK_THROWS_AS(kmix::run_initkmix(ds, model, 21), kmix::error);
}
