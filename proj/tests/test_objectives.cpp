#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace moeliga;

namespace {

/// Feature 0 equals the class, features 1..k-1 are noise.
Dataset label_feature_dataset(std::size_t n, std::size_t k, std::uint64_t seed) {
    auto noise = testing_util::noise_dataset(n, k, 2, seed);
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) values.push_back(j == 0 ? double(noise.label(i)) : noise.value(i, j));
    return Dataset::from_flat(n, k, std::move(values), noise.labels());
}

Dataset binary_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    return Dataset::from_rows(rows, labels);
}

}  // namespace

TEST(CardinalityRatio, Examples) {
    EXPECT_DOUBLE_EQ(cardinality_ratio(500, 22), 0.956);
    EXPECT_DOUBLE_EQ(cardinality_ratio(Chromosome(7, true)), 0.0);
    EXPECT_DOUBLE_EQ(cardinality_ratio(Chromosome::from_indices(100, {42})), 0.99);
    EXPECT_THROW(cardinality_ratio(0, 0), Error);
}

TEST(Sigmoid, MidpointAndMonotonicity) {
    EXPECT_DOUBLE_EQ(sigmoid_map(0.5, 0.5, -0.5), 0.5);
    const auto ten = Chromosome::from_indices(1000, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto fifteen = ten;
    for (std::size_t i = 10; i < 15; ++i) fifteen.set(i);
    EXPECT_GT(objective2_sigmoid(ten, 0.5, -0.5), objective2_sigmoid(fifteen, 0.5, -0.5));
}

TEST(Sigmoid, SteepRegionGapsMatchReference) {
    // Reference values from an independent evaluation of the logistic map.
    const double high_gap = sigmoid_map(0.99, 15, -0.9) - sigmoid_map(0.985, 15, -0.9);
    const double low_gap = sigmoid_map(0.40, 15, -0.9) - sigmoid_map(0.395, 15, -0.9);
    EXPECT_NEAR(high_gap, 0.012532164296687132, 1e-12);
    EXPECT_NEAR(low_gap, 3.992137266457384e-05, 1e-15);
    EXPECT_GT(high_gap, low_gap);
}

TEST(Sigmoid, CompactnessFallsBackToRawRatio) {
    EXPECT_DOUBLE_EQ(compactness(10, 3, std::nullopt, -0.5), 0.7);
    EXPECT_DOUBLE_EQ(compactness(10, 3, 0.5, -0.5), sigmoid_map(0.7, 0.5, -0.5));
}

TEST(Objective1, PerfectFeatureScoresOne) {
    const auto d = label_feature_dataset(40, 5, 2);
    for (int n_tests : {1, 3, 5}) {
        ObjectiveConfig cfg;
        cfg.n_tests = n_tests;
        EXPECT_DOUBLE_EQ(objective1_uar(Chromosome::from_indices(5, {0}), d, cfg), 1.0);
        EXPECT_DOUBLE_EQ(objective1_uar(Chromosome::from_indices(5, {0, 3}), d, cfg), 1.0);
    }
}

TEST(Objective1, MeanOfIndividualSplits) {
    const auto d = testing_util::noise_dataset(60, 4, 2, 9);
    ObjectiveConfig cfg;
    cfg.n_tests = 3;
    cfg.base_seed = 77;
    const auto x = Chromosome::from_string("1010");
    double sum = 0.0;
    for (int t = 0; t < 3; ++t) {
        const auto s = stratified_split(d, {0.3, split_seed(77, t)});
        sum += holdout_uar(x, s.train, s.validation, decision_tree_factory());
    }
    EXPECT_DOUBLE_EQ(objective1_uar(x, d, cfg), sum / 3.0);
}

TEST(Objective1, PureNoiseIsNearChance) {
    double total = 0.0;
    for (std::uint64_t r = 0; r < 30; ++r) {
        const auto d = testing_util::noise_dataset(200, 3, 2, 1000 + r);
        ObjectiveConfig cfg;
        cfg.base_seed = r;
        cfg.validation_fraction = 0.5;
        total += objective1_uar(Chromosome(3, true), d, cfg);
    }
    EXPECT_NEAR(total / 30.0, 0.5, 0.1);
}

TEST(Objective1, EmptyChromosomeThrows) {
    const auto d = testing_util::noise_dataset(20, 3, 2, 1);
    EXPECT_THROW(objective1_uar(Chromosome(3), d, ObjectiveConfig{}), DataError);
}

TEST(Objective3, PerfectSeparabilityIsOne) {
    // Same-class rows identical, classes differ in every feature.
    const auto d = binary_dataset({{0, 0, 0}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(objective3_distance(Chromosome(3, true), d, 50, 1), 1.0);
    EXPECT_DOUBLE_EQ(objective3_distance_at(Chromosome(3, true), d, {0, 1, 2, 3}), 1.0);
}

TEST(Objective3, InvertedConstructionIsMinusOne) {
    // Same-class rows differ everywhere; every row has an identical twin in the other class.
    const auto d = binary_dataset({{0, 0}, {1, 1}, {0, 0}, {1, 1}}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(objective3_distance(Chromosome(2, true), d, 50, 3), -1.0);
}

TEST(Objective3, FourInstanceBruteForce) {
    // Hand enumeration: per-row (miss - hit)/2 = 0.5, 1, 0.5, -1.
    const auto d = Dataset::from_rows({{0, 0}, {1, 0}, {3, 3}, {0, 2}}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(objective3_distance_at(Chromosome(2, true), d, {0, 1, 2, 3}), 0.25);
    EXPECT_DOUBLE_EQ(objective3_distance_at(Chromosome(2, true), d, {3}), -1.0);
    // Second feature only (values 0,0,3,2): per-row margins 2, 2, 2, 1.
    EXPECT_DOUBLE_EQ(objective3_distance_at(Chromosome::from_string("01"), d, {0, 1, 2, 3}), 1.75);
}

TEST(Objective3, BoundedOnRandomBinaryData) {
    Rng rng(2024);
    std::bernoulli_distribution bit(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 6 + trial % 20;
        const std::size_t k = 1 + trial % 7;
        std::vector<double> values(n * k);
        for (auto& v : values) v = bit(rng) ? 1.0 : 0.0;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
        const auto d = Dataset::from_flat(n, k, values, labels);
        const double m = objective3_distance(Chromosome(k, true), d, 32, static_cast<std::uint64_t>(trial));
        EXPECT_GE(m, -1.0);
        EXPECT_LE(m, 1.0);
    }
}

TEST(Objective3, InvariantUnderClassRelabeling) {
    const auto d = testing_util::noise_dataset(30, 4, 3, 4);
    std::vector<double> values;
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 4; ++j) values.push_back(d.value(i, j));
    auto labels = d.labels();
    for (auto& l : labels) l = (l + 1) % 3;
    const auto relabeled = Dataset::from_flat(30, 4, values, labels);
    const auto x = Chromosome::from_string("1101");
    EXPECT_DOUBLE_EQ(objective3_distance(x, d, 40, 5), objective3_distance(x, relabeled, 40, 5));
}

TEST(Objective3, Errors) {
    const auto d = binary_dataset({{0}, {0}, {1}, {1}}, {0, 0, 1, 1});
    EXPECT_THROW(objective3_distance(Chromosome(1, true), d, 0, 1), ConfigError);
    EXPECT_THROW(objective3_distance(Chromosome(1, false), d, 4, 1), DataError);
    // A view where class 1 has a single member.
    EXPECT_THROW(objective3_distance_at(Chromosome(1, true), d.select_rows({0, 1, 2}), {2}), DataError);
}

TEST(Evaluator, MemoizesAndMatchesDirectEvaluation) {
    const auto d = testing_util::noise_dataset(50, 6, 2, 8);
    ObjectiveConfig cfg;
    cfg.base_seed = 3;
    Evaluator ev(d, cfg, 1);
    const auto x = Chromosome::from_string("110010");
    const auto a = ev.evaluate_batch({x, x, Chromosome::from_string("000001")});
    EXPECT_EQ(ev.computed(), 2u);
    EXPECT_EQ(ev.requested(), 3u);
    EXPECT_EQ(a[0], a[1]);
    EXPECT_EQ(a[0], evaluate_objectives(x, d, cfg, decision_tree_factory()));
    ev.evaluate(x);
    EXPECT_EQ(ev.computed(), 2u);
    EXPECT_EQ(a[0].n_selected, 3u);
}

TEST(Evaluator, ThreadCountDoesNotChangeResults) {
    const auto d = testing_util::noise_dataset(80, 12, 3, 21);
    ObjectiveConfig cfg;
    cfg.base_seed = 99;
    Rng rng(4);
    std::bernoulli_distribution coin(0.4);
    std::vector<Chromosome> batch;
    for (int i = 0; i < 40; ++i) {
        Chromosome c(12);
        for (std::size_t j = 0; j < 12; ++j) c.set(j, coin(rng));
        repair(c, rng);
        batch.push_back(c);
    }
    Evaluator serial(d, cfg, 1), parallel(d, cfg, 4);
    EXPECT_EQ(serial.evaluate_batch(batch), parallel.evaluate_batch(batch));
}

TEST(Evaluator, DisablingObjective3) {
    const auto d = testing_util::noise_dataset(30, 3, 2, 1);
    ObjectiveConfig cfg;
    cfg.use_objective3 = false;
    Evaluator ev(d, cfg);
    EXPECT_EQ(ev.evaluate(Chromosome(3, true)).m_dist, 0.0);
    EXPECT_EQ(ev.mask().size(), 2u);
}

TEST(ObjectiveConfig, Validation) {
    ObjectiveConfig cfg;
    cfg.n_tests = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lambda = -1.0;
    try {
        cfg.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "lambda");
    }
    cfg = {};
    cfg.lambda = std::nullopt;
    EXPECT_NO_THROW(cfg.validate());
}
