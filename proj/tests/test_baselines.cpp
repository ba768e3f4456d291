#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"

using namespace moeliga;

TEST(Synthetic, DeterministicPerSeed) {
    const SyntheticSpec spec{50, 8, 2, 3, 0.1, 9};
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    EXPECT_EQ(a.informative, b.informative);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(a.data.value(i, j), b.data.value(i, j));
    EXPECT_EQ(a.informative.size(), 2u);
}

TEST(Synthetic, SingleInformativeFeatureIsSeparable) {
    const auto syn = generate_synthetic({200, 10, 1, 2, 0.1, 3});
    const auto split = stratified_split(syn.data, {0.3, 1});
    const auto x = Chromosome::from_indices(10, syn.informative);
    auto factory = decision_tree_factory(1);
    EXPECT_GE(holdout_uar(x, split.train, split.validation, factory), 0.99);
}

TEST(Synthetic, NoSignalMeansChance) {
    const auto syn = generate_synthetic({400, 5, 0, 2, 0.1, 3});
    ObjectiveConfig cfg;
    cfg.validation_fraction = 0.5;
    EXPECT_NEAR(objective1_uar(Chromosome(5, true), syn.data, cfg), 0.5, 0.1);
}

TEST(Synthetic, Validation) {
    EXPECT_THROW(generate_synthetic({50, 5, 6, 2, 0.1, 1}), ConfigError);
    EXPECT_THROW(generate_synthetic({50, 5, 1, 2, 0.6, 1}), ConfigError);
    EXPECT_THROW(generate_synthetic({50, 5, 1, 1, 0.1, 1}), ConfigError);
}

TEST(MutualInformation, HandBuiltJoint) {
    // counts [[30,10],[10,30]]; reference plug-in value computed independently.
    std::vector<int> x, y;
    auto add = [&](int a, int b, int n) {
        for (int i = 0; i < n; ++i) {
            x.push_back(a);
            y.push_back(b);
        }
    };
    add(0, 0, 30);
    add(0, 1, 10);
    add(1, 0, 10);
    add(1, 1, 30);
    EXPECT_NEAR(mutual_information(x, y), 0.13081203594113697, 1e-12);
}

TEST(MutualInformation, IdentityIsEntropyAndRankedFirst) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    Rng rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({g(rng), double(i % 2), 4.0});
        labels.push_back(i % 2);
    }
    const auto d = Dataset::from_rows(rows, labels);
    const auto ranking = mi_rank(d, 10);
    EXPECT_EQ(ranking[0].feature, 1u);
    EXPECT_NEAR(ranking[0].score, std::log(2.0), 1e-12);
    EXPECT_EQ(ranking[2].feature, 2u);  // constant column
    EXPECT_EQ(ranking[2].score, 0.0);
}

TEST(MutualInformation, IndependentFeatureNearZero) {
    const auto d = testing_util::noise_dataset(20000, 1, 2, 5);
    EXPECT_LT(mi_rank(d, 10)[0].score, 0.005);
}

TEST(MutualInformation, InvariantUnderMonotoneTransform) {
    const auto syn = generate_synthetic({150, 6, 2, 2, 0.4, 8});
    std::vector<double> values;
    for (std::size_t i = 0; i < 150; ++i)
        for (std::size_t j = 0; j < 6; ++j) values.push_back(j == 3 ? std::exp(syn.data.value(i, j)) : syn.data.value(i, j));
    const auto transformed = Dataset::from_flat(150, 6, values, syn.data.labels());
    const auto a = mi_rank(syn.data, 10);
    const auto b = mi_rank(transformed, 10);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_EQ(a[k].feature, b[k].feature);
        EXPECT_DOUBLE_EQ(a[k].score, b[k].score);
    }
}

TEST(MutualInformation, BinsValidated) { EXPECT_THROW(equal_frequency_bins({1, 2}, 1), ConfigError); }

TEST(Sfs, PicksPerfectFeatureFirst) {
    const auto syn = generate_synthetic({100, 8, 1, 2, 0.05, 2});
    const auto trace = sfs_greedy(syn.data, 1, ObjectiveConfig{});
    ASSERT_EQ(trace.size(), 1u);
    EXPECT_EQ(trace[0].subset, syn.informative);
    EXPECT_DOUBLE_EQ(trace[0].score, 1.0);
}

TEST(Sfs, NestedSubsetsAndRecordedSizes) {
    const auto syn = generate_synthetic({80, 7, 2, 2, 0.3, 4});
    const auto trace = sfs_greedy(syn.data, 5, ObjectiveConfig{});
    ASSERT_EQ(trace.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(trace[k].subset.size(), k + 1);
        if (k > 0) {
            EXPECT_TRUE(std::equal(trace[k - 1].subset.begin(), trace[k - 1].subset.end(), trace[k].subset.begin()));
        }
    }
    EXPECT_THROW(sfs_greedy(syn.data, 8, ObjectiveConfig{}), ConfigError);
}

TEST(Sfs, GreedyPairNeverBeatsExhaustivePair) {
    // XOR of features 0 and 1 plus noise features.
    Rng rng(6);
    std::bernoulli_distribution bit(0.5);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 120; ++i) {
        const int a = bit(rng), b = bit(rng);
        rows.push_back({double(a), double(b), g(rng), g(rng), g(rng)});
        labels.push_back(a ^ b);
    }
    const auto d = Dataset::from_rows(rows, labels);
    const ObjectiveConfig cfg;
    const auto trace = sfs_greedy(d, 2, cfg);
    double best_pair = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j)
            best_pair = std::max(best_pair, objective1_uar(Chromosome::from_indices(5, {i, j}), d, cfg));
    EXPECT_LE(trace[1].score, best_pair);
    EXPECT_DOUBLE_EQ(best_pair, 1.0);
}

TEST(SizeSweep, SmallestArgmax) {
    EXPECT_EQ(smallest_argmax({0.5, 0.6, 0.7, 0.8}).best_k, 4u);
    EXPECT_EQ(smallest_argmax({0.5, 0.6, 0.9, 0.9, 0.9}).best_k, 3u);
    EXPECT_EQ(smallest_argmax({0.4}).best_k, 1u);
    EXPECT_THROW(smallest_argmax({}), Error);
}

TEST(SizeSweep, OverRanking) {
    const auto syn = generate_synthetic({100, 6, 1, 2, 0.05, 11});
    std::vector<std::size_t> ordering{syn.informative[0]};
    for (std::size_t j = 0; j < 6; ++j)
        if (j != syn.informative[0]) ordering.push_back(j);
    const auto s = optimal_size_sweep(ordering, syn.data, ObjectiveConfig{}, 3);
    EXPECT_EQ(s.scores.size(), 3u);
    EXPECT_EQ(s.best_k, 1u);
    EXPECT_DOUBLE_EQ(s.best_score, 1.0);
}

TEST(Baselines, PlantedFeaturesRankedFirst) {
    int mi_ok = 0, sfs_ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto syn = generate_synthetic({200, 15, 3, 2, 0.1, seed});
        const std::set<std::size_t> planted(syn.informative.begin(), syn.informative.end());
        const auto mi = mi_rank(syn.data, 10);
        bool ok = true;
        for (std::size_t k = 0; k < 3; ++k) ok &= planted.count(mi[k].feature) > 0;
        mi_ok += ok;
        // One planted feature separates the classes alone, so forward selection
        // must start with a planted feature.
        const auto trace = sfs_greedy(syn.data, 1, ObjectiveConfig{});
        sfs_ok += planted.count(trace[0].subset[0]) > 0;
    }
    EXPECT_GE(mi_ok, 4);
    EXPECT_GE(sfs_ok, 4);
}
