#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace moeliga;

namespace {

FrontMember member(std::size_t n_features, std::vector<std::size_t> active, double uar_value,
                   std::optional<double> test = std::nullopt) {
    FrontMember m;
    m.chromosome = Chromosome::from_indices(n_features, active);
    m.objectives.uar = uar_value;
    m.objectives.n_selected = active.size();
    m.objectives.cr_mapped = compactness(n_features, active.size(), 0.5, -0.5);
    m.objectives.m_dist = 0.1 * double(active.size()) - 1.0 / 3.0;
    m.test_uar = test;
    return m;
}

}  // namespace

TEST(R1, Examples) {
    FrontMember m = member(10, {0}, 0.8);
    m.objectives.cr_mapped = 0.9;
    EXPECT_NEAR(ideal_point_score(0.8, 0.9), 0.7763932022500211, 1e-15);
    EXPECT_DOUBLE_EQ(ideal_point_score(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(r1_score(m, std::nullopt, 0.0), ideal_point_score(0.8, 0.9));
}

TEST(R1hat, LeukemiaArithmetic) {
    std::vector<std::size_t> active(30);
    for (std::size_t i = 0; i < 30; ++i) active[i] = i;
    const auto m = member(7129, active, 0.0, 0.91);
    EXPECT_NEAR(cardinality_ratio(m.chromosome), 0.9957918361621546, 1e-15);
    EXPECT_NEAR(r1hat_score(m), 0.9099016723635441, 1e-12);
}

TEST(R1hat, FullSubsetScoresZero) {
    const auto m = member(4, {0, 1, 2, 3}, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(r1hat_score(m), 0.0);
}

TEST(Representative, MatchesExhaustiveScanWithTieBreaks) {
    Rng rng(12);
    std::uniform_int_distribution<int> level(0, 4);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        ParetoFront front;
        const std::size_t n = 1 + trial % 9;
        for (std::size_t i = 0; i < n; ++i) {
            Chromosome c(6);
            for (std::size_t j = 0; j < 6; ++j) c.set(j, coin(rng));
            repair(c, rng);
            FrontMember m{c, {}, 0.6 + 0.1 * level(rng)};
            m.objectives.n_selected = c.count();
            front.members.push_back(m);
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double si = r1hat_score(front.members[i]);
            const double sb = r1hat_score(front.members[best]);
            const auto& a = front.members[i].chromosome;
            const auto& b = front.members[best].chromosome;
            if (si > sb || (si == sb && (a.count() < b.count() || (a.count() == b.count() && a < b)))) best = i;
        }
        EXPECT_EQ(representative_r1hat(front).index, best);
    }
    EXPECT_THROW(representative_r1hat(ParetoFront{}), Error);
}

TEST(Export, EmptyFrontIsHeaderOnly) {
    ParetoFront f{"rep0", 3, 5, {}};
    EXPECT_EQ(front_to_csv(f), std::string(kFrontCsvHeader) + "\n");
    EXPECT_TRUE(front_from_csv(front_to_csv(f), 5).members.empty());
}

TEST(Export, CsvAndJsonRoundTripExactly) {
    ParetoFront f{"rep2", 17, 9, {}};
    f.members.push_back(member(9, {0}, 0.7, 0.65));
    f.members.push_back(member(9, {1, 4}, 0.8123456789012345, std::nullopt));
    f.members.push_back(member(9, {2, 3, 8}, 1.0 / 3.0, 2.0 / 3.0));
    const auto dir = testing_util::scratch_dir("export");
    export_front(f, dir / "front.csv");
    for (const auto& back : {import_front_csv(dir / "front.csv", 9), import_front_json(dir / "front.json")}) {
        ASSERT_EQ(back.members.size(), 3u);
        EXPECT_EQ(back.run_id, "rep2");
        EXPECT_EQ(back.generation, 17u);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_EQ(back.members[i].chromosome, f.members[i].chromosome);
            EXPECT_EQ(back.members[i].objectives, f.members[i].objectives);
            EXPECT_EQ(back.members[i].test_uar, f.members[i].test_uar);
        }
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "front.csv.tmp"));
}

TEST(Export, HexCodecAtLargeWidth) {
    Rng rng(13);
    std::bernoulli_distribution coin(0.01);
    Chromosome c(20531);
    for (std::size_t i = 0; i < c.size(); ++i) c.set(i, coin(rng));
    c.set(20530);
    const auto hex = c.to_hex();
    EXPECT_EQ(hex.size(), (20531u + 3) / 4);
    EXPECT_EQ(Chromosome::from_hex(hex, 20531), c);
}

TEST(Export, RejectsBadHeader) { EXPECT_THROW(front_from_csv("a,b\n", 3), Error); }

TEST(Trace, CsvHeaderIsStable) {
    RunTrace t;
    t.records.push_back({1, 0.75, 0.5, 2, 4, 100, 0, 0.0});
    EXPECT_EQ(trace_to_csv(t),
              "generation,best_uar,median_uar,best_n_selected,front_size,evals_cumulative,"
              "subordinate_generations_cumulative\n1,0.75,0.5,2,4,100,0\n");
}

TEST(Summary, MediansAndDeviation) {
    std::vector<ParetoFront> runs;
    for (double u : {0.9, 0.7, 0.8}) {
        ParetoFront f{"r", 1, 10, {}};
        f.members.push_back(member(10, {0, 1}, u, u));
        runs.push_back(f);
    }
    const auto s = summarize_replications(runs);
    EXPECT_DOUBLE_EQ(s.median_uar, 0.8);
    EXPECT_DOUBLE_EQ(s.median_n_selected, 2.0);
    EXPECT_DOUBLE_EQ(s.median_r1hat, ideal_point_score(0.8, 0.8));
    EXPECT_GT(s.std_r1hat, 0.0);
    const auto j = summary_to_json(s, {1, 2, 3});
    EXPECT_EQ(j["runs"].size(), 3u);
    EXPECT_EQ(j["runs"][1]["seed"], 2);
    EXPECT_TRUE(j.contains("std_r1hat"));
}

TEST(Summary, TestUarComputedFromHeldOutData) {
    const auto syn = generate_synthetic({100, 6, 1, 2, 0.1, 4});
    const auto split = stratified_split(syn.data, {0.2, 1});
    ParetoFront f{"r", 1, 6, {}};
    f.members.push_back(member(6, {syn.informative[0]}, 1.0));
    compute_test_uar(f, split.train, split.validation);
    EXPECT_DOUBLE_EQ(*f.members[0].test_uar, 1.0);
}
