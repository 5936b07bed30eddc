#include <sstream>

#include <gtest/gtest.h>

#include "synthetic.hpp"
#include "tarsim/cost.hpp"
#include "tarsim/error.hpp"

namespace tarsim {
namespace {

IterationEntry entry(int it, std::int64_t reviewed, std::int64_t positives,
                     std::optional<std::int64_t> depth = std::nullopt,
                     std::optional<std::int64_t> depth_pos = std::nullopt) {
  IterationEntry e;
  e.iteration = it;
  e.cumulative_reviewed = reviewed;
  e.cumulative_positives = positives;
  e.second_phase_depth = depth;
  e.second_phase_positives = depth_pos;
  return e;
}

RunRecord two_phase(std::vector<IterationEntry> its) {
  RunRecord r;
  r.category_id = "c";
  r.config.workflow = WorkflowKind::two_phase;
  r.total_positives = 100;
  r.required_positives = 80;
  r.iterations = std::move(its);
  return r;
}

TEST(IterationCostTest, ExpensiveTrainingHandExample) {
  const auto rec = two_phase({entry(0, 2, 1, 1200, 79), entry(3, 600, 60, 900, 20)});
  const auto e = iteration_cost(rec, 1, CostStructure::expensive_training());
  EXPECT_EQ(e.iteration, 3);
  EXPECT_DOUBLE_EQ(e.phase1_pos, 600);
  EXPECT_DOUBLE_EQ(e.phase1_neg, 5400);
  EXPECT_DOUBLE_EQ(e.phase2_pos, 20);
  EXPECT_DOUBLE_EQ(e.phase2_neg, 880);
  EXPECT_DOUBLE_EQ(e.total, 6900);
  EXPECT_FALSE(e.depth_zero);
}

TEST(IterationCostTest, OnePhaseIsReviewCount) {
  RunRecord rec;
  rec.iterations = {entry(0, 2, 1), entry(1, 1000, 80)};
  EXPECT_DOUBLE_EQ(iteration_cost(rec, 1, CostStructure::uniform()).total, 1000);
  EXPECT_DOUBLE_EQ(optimal_cost(rec, CostStructure::uniform()).cost, 1000);
  EXPECT_EQ(optimal_cost(rec, CostStructure::uniform()).iteration, 1);
}

TEST(IterationCostTest, DepthZeroHasNoPhaseTwoSectors) {
  const auto rec = two_phase({entry(0, 200, 85, 0, 0)});
  const auto e = iteration_cost(rec, 0, CostStructure::uniform());
  EXPECT_EQ(e.phase2_pos, 0);
  EXPECT_EQ(e.phase2_neg, 0);
  EXPECT_TRUE(e.depth_zero);
  EXPECT_THROW(iteration_cost(rec, 1, CostStructure::uniform()), Error);
}

TEST(OptimalCostTest, EarliestMinimum) {
  // uniform totals: 5000, 4200, 4600, 4200
  const auto rec = two_phase({entry(0, 1000, 10, 4000, 70), entry(1, 1200, 40, 3000, 40),
                              entry(2, 1400, 60, 3200, 20), entry(3, 1600, 70, 2600, 10)});
  const auto best = optimal_cost(rec, CostStructure::uniform());
  EXPECT_DOUBLE_EQ(best.cost, 4200);
  EXPECT_EQ(best.iteration, 1);
}

TEST(OptimalCostTest, MatchesBruteForceOnRandomRecords) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto rec = testing::random_run_record(rng, WorkflowKind::two_phase);
    for (const auto& cs : {CostStructure::uniform(), CostStructure::expensive_training()}) {
      const auto table = cost_dynamics_table(rec, cs);
      EXPECT_EQ(table, testing::brute_force_dynamics(rec, cs));
      double best = table[0].total;
      int at = table[0].iteration;
      for (const auto& e : table) {
        if (e.total < best) {
          best = e.total;
          at = e.iteration;
        }
      }
      const auto opt = optimal_cost(rec, cs);
      EXPECT_EQ(opt.cost, best);
      EXPECT_EQ(opt.iteration, at);
    }
  }
}

TEST(CostDynamicsTest, AllDepthZeroIsStaircase) {
  const auto rec = two_phase({entry(0, 100, 85, 0, 0), entry(1, 202, 90, 0, 0)});
  const auto table = cost_dynamics_table(rec, CostStructure::expensive_training());
  ASSERT_EQ(table.size(), 2u);
  EXPECT_DOUBLE_EQ(table[1].total, 2020);
  for (const auto& e : table) EXPECT_TRUE(e.depth_zero);
}

TEST(CostDynamicsTest, CsvFormat) {
  const auto rec = two_phase({entry(0, 2, 1, 10, 3)});
  std::ostringstream out;
  write_dynamics_csv(cost_dynamics_table(rec, CostStructure::uniform()), out);
  EXPECT_EQ(out.str(), "iteration,p1_pos,p1_neg,p2_pos,p2_neg,total,depth_zero_flag\n0,1,1,3,7,12,0\n");
}

TEST(RelativeCostTest, SelfIsExactlyOne) {
  const std::vector<RunCost> runs{{"a", 0, 123.0}, {"a", 1, 77.0}, {"b", 0, 3.0}};
  EXPECT_EQ(relative_cost(runs, runs), 1.0);
}

TEST(RelativeCostTest, RatioOfMeansWithinCategory) {
  const std::vector<RunCost> runs{{"a", 0, 80.0}, {"a", 1, 120.0}};
  const std::vector<RunCost> base{{"a", 0, 100.0}, {"a", 1, 100.0}};
  EXPECT_DOUBLE_EQ(relative_cost(runs, base), 1.0);
}

TEST(RelativeCostTest, MacroAverageOverCategories) {
  const std::vector<RunCost> runs{{"a", 0, 80.0}, {"b", 0, 120.0}};
  const std::vector<RunCost> base{{"a", 0, 100.0}, {"b", 0, 100.0}};
  EXPECT_DOUBLE_EQ(relative_cost(runs, base), 1.0);
  const std::vector<RunCost> halved{{"a", 0, 50.0}, {"b", 0, 50.0}};
  EXPECT_DOUBLE_EQ(relative_cost(halved, base), 0.5);
}

TEST(RelativeCostTest, UnpairedRunsAreAnError) {
  const std::vector<RunCost> runs{{"a", 0, 80.0}};
  const std::vector<RunCost> base{{"a", 1, 100.0}};
  EXPECT_THROW(relative_cost(runs, base), Error);
  EXPECT_THROW(relative_cost({}, {}), Error);
}

TEST(CostPresetTest, Constants) {
  EXPECT_EQ(cost_preset("uniform"), CostStructure::uniform());
  EXPECT_EQ(cost_preset("expensive_training"), CostStructure::expensive_training());
  EXPECT_DOUBLE_EQ(kExpensiveTrainingMultiplier, 10.0);
  EXPECT_DOUBLE_EQ(CostStructure::expensive_training().phase1_pos /
                       CostStructure::expensive_training().phase2_pos,
                   kExpensiveTrainingMultiplier);
  EXPECT_THROW(cost_preset("cheap"), Error);
}

}  // namespace
}  // namespace tarsim
