#include <gtest/gtest.h>

#include "ranbn/eval.hpp"
#include "ranbn/search.hpp"
#include "ranbn/sim.hpp"
#include "test_support.hpp"

using namespace ranbn;
using ranbn::testing::discrete_spec;

namespace {

DiscreteDataset two_by_two(int a00, int a01, int a10, int a11) {
    std::vector<std::vector<int>> rows;
    for (int i = 0; i < a00; ++i) rows.push_back({0, 0});
    for (int i = 0; i < a01; ++i) rows.push_back({0, 1});
    for (int i = 0; i < a10; ++i) rows.push_back({1, 0});
    for (int i = 0; i < a11; ++i) rows.push_back({1, 1});
    return ranbn::testing::dataset_from_rows({discrete_spec("X", 2), discrete_spec("Y", 2)}, rows);
}

BayesianNetwork three_node(bool collider) {
    std::vector<VariableSpec> specs{discrete_spec("A", 2), discrete_spec("B", 2), discrete_spec("C", 2)};
    Dag d({"A", "B", "C"});
    std::vector<Cpd> cpds;
    if (collider) {
        d.add_edge("A", "C");
        d.add_edge("B", "C");
        cpds = {Cpd{"A", {}, 2, {}, {0.5, 0.5}}, Cpd{"B", {}, 2, {}, {0.5, 0.5}},
                Cpd{"C", {"A", "B"}, 2, {2, 2}, {0.9, 0.1, 0.3, 0.7, 0.3, 0.7, 0.1, 0.9}}};
    } else {
        d.add_edge("A", "B");
        d.add_edge("B", "C");
        cpds = {Cpd{"A", {}, 2, {}, {0.5, 0.5}}, Cpd{"B", {"A"}, 2, {2}, {0.85, 0.15, 0.15, 0.85}},
                Cpd{"C", {"B"}, 2, {2}, {0.85, 0.15, 0.15, 0.85}}};
    }
    return BayesianNetwork(specs, d, cpds);
}

}  // namespace

TEST(ChiSquare, TwoByTwoHandComputation) {
    // Expected count 20 in every cell: 4 * 10^2 / 20 = 20.
    const auto t = chi_square_test(two_by_two(30, 10, 10, 30), 0, 1, {});
    EXPECT_NEAR(t.statistic, 20.0, 1e-12);
    EXPECT_EQ(t.dof, 1.0);
    EXPECT_NEAR(t.p_value, 7.744216431044088e-06, 1e-15);  // scipy chi2.sf(20, 1)
    EXPECT_FALSE(t.degenerate);
}

TEST(ChiSquare, IndependentTableHasZeroStatistic) {
    const auto t = chi_square_test(two_by_two(25, 25, 25, 25), 0, 1, {});
    EXPECT_NEAR(t.statistic, 0.0, 1e-12);
    EXPECT_NEAR(t.p_value, 1.0, 1e-12);
}

TEST(ChiSquare, TooFewSamplesIsDegenerate) {
    EXPECT_TRUE(chi_square_test(two_by_two(1, 1, 1, 1), 0, 1, {}).degenerate);
}

TEST(ChiSquare, ConditioningPoolsStrata) {
    const auto data = forward_sample(three_node(false), {}, 20000, 3);
    const std::vector<std::size_t> z{1};
    const auto t = chi_square_test(data, 0, 2, z);
    EXPECT_EQ(t.dof, 2.0);
    EXPECT_GT(t.p_value, 0.01);
    EXPECT_LT(chi_square_test(data, 0, 2, {}).p_value, 1e-6);
}

TEST(Pc, IndependentVariablesHaveNoEdge) {
    std::vector<VariableSpec> specs{discrete_spec("A", 3), discrete_spec("B", 2)};
    BayesianNetwork bn(specs, Dag({"A", "B"}), {uniform_cpd("A", {}, 3, {}), uniform_cpd("B", {}, 2, {})});
    const auto r = pc_algorithm(forward_sample(bn, {}, 10000, 8), 0.05);
    EXPECT_EQ(r.dag.edge_count(), 0u);
    EXPECT_TRUE(r.skeleton.empty());
}

TEST(Pc, VStructureIsOrientedAsCollider) {
    const auto r = pc_algorithm(forward_sample(three_node(true), {}, 20000, 2), 0.05);
    EXPECT_EQ(r.skeleton, (std::vector<NamedEdge>{{"A", "C"}, {"B", "C"}}));
    EXPECT_EQ(r.dag.named_edges(), (std::vector<NamedEdge>{{"A", "C"}, {"B", "C"}}));
    EXPECT_TRUE(r.forced_orientations.empty());
}

TEST(Pc, ChainSkeletonWithLexicographicOrientation) {
    const auto truth = three_node(false);
    const auto r = pc_algorithm(forward_sample(truth, {}, 20000, 4), 0.05);
    EXPECT_EQ(r.skeleton, (std::vector<NamedEdge>{{"A", "B"}, {"B", "C"}}));
    EXPECT_EQ(r.forced_orientations.size(), 2u);
    const auto m = compare_structures(r.dag, truth.dag());
    EXPECT_EQ(m.correct + m.reversed, 2u);
    EXPECT_EQ(m.missed, 0u);
}

TEST(Pc, OutputIsAlwaysAcyclic) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto bn = ranbn::testing::random_network(rng, {.min_nodes = 6, .max_nodes = 7});
        const auto r = pc_algorithm(forward_sample(bn, {}, 3000, seed), 0.05);
        EXPECT_EQ(r.dag.topological_order().size(), bn.size());
        EXPECT_EQ(r.dag.edge_count(), r.skeleton.size());
    }
}
