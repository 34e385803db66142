#include <gtest/gtest.h>

#include <chrono>

#include "support.hpp"

using namespace rulerepair;
using namespace fixtures;

namespace {

RepairInstance one_cell(LabelId vote, LabelId truth, Thresholds t) {
  RepairInstance inst;
  inst.votes = LabelMatrix::from_rows({{vote}});
  inst.truth = {truth};
  inst.thresholds = t;
  inst.label_count = 3;
  return inst;
}

std::size_t wrong_cells(const RepairInstance& inst) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    for (std::size_t j = 0; j < inst.m(); ++j) k += inst.votes.at(i, j) != inst.truth[i] ? 1 : 0;
  }
  return k;
}

LabelMatrix all_truth(const RepairInstance& inst) {
  LabelMatrix o(inst.n(), inst.m());
  for (std::size_t i = 0; i < inst.n(); ++i) {
    for (std::size_t j = 0; j < inst.m(); ++j) o.at(i, j) = inst.truth[i];
  }
  return o;
}

}  // namespace

TEST(VerifyPlan, ReferenceWorkedSolutionIsFeasibleAtCostFour) {
  const RepairInstance inst = worked_instance();
  const RepairPlan published{worked_reference_solution(), 4, false, 0};
  const ConstraintReport report = verify_plan(published, inst);
  EXPECT_TRUE(report.feasible);
  EXPECT_EQ(report.recomputed_cost, 4u);
  EXPECT_TRUE(report.cost_matches);
}

TEST(VerifyPlan, OriginalVotesViolateTheWorkedInstance) {
  const RepairInstance inst = worked_instance();
  const ConstraintReport report = verify_plan({inst.votes, 0, false, 0}, inst);
  EXPECT_FALSE(report.feasible);
  // x1 has accuracy 1/3 < 1/2; x2 and x3 have evidence 1/3 < 1/2; x3's only
  // vote is wrong.
  EXPECT_EQ(report.accuracy_ok, (std::vector<bool>{false, true, false}));
  EXPECT_EQ(report.evidence_ok, (std::vector<bool>{true, false, false}));
  // r1: 0 of 1 votes correct; r2: 1 of 3; r3: 1 of 1.
  EXPECT_EQ(report.rule_ok, (std::vector<bool>{false, false, true}));
}

TEST(VerifyPlan, StoredCostMismatchIsFlagged) {
  const RepairInstance inst = worked_instance();
  const ConstraintReport report = verify_plan({worked_reference_solution(), 3, false, 0}, inst);
  EXPECT_FALSE(report.cost_matches);
  EXPECT_FALSE(report.feasible);
}

TEST(VerifyPlan, AllTruthPlanIsAlwaysFeasible) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const RepairInstance inst = random_instance(rng, 6, 5, 4);
    const LabelMatrix o = all_truth(inst);
    EXPECT_TRUE(verify_plan({o, repair_cost(inst.votes, o), false, 0}, inst).feasible);
  }
}

TEST(VerifyPlan, ShapeMismatchIsAnError) {
  EXPECT_THROW(verify_plan({LabelMatrix(2, 2), 0, false, 0}, worked_instance()), Error);
}

TEST(PlanRepair, WorkedInstanceUnderIntegerProgramConstraints) {
  // With non-abstain denominators three changes suffice, e.g. x1 -> (1,0,2),
  // x2 -> (0,1,1), x3 -> (2,1,0).
  const RepairInstance inst = worked_instance();
  const RepairPlan plan = plan_repair(inst);
  EXPECT_TRUE(plan.optimal);
  EXPECT_EQ(plan.cost, 3u);
  EXPECT_TRUE(verify_plan(plan, inst).feasible);
  EXPECT_EQ(plan.cost, brute_force_plan(inst, PlanDomain::kFull).cost);
}

TEST(PlanRepair, WorkedInstanceUnderWholeRowAndColumnDenominators) {
  RepairInstance inst = worked_instance();
  inst.thresholds.base = AccuracyBase::kAll;
  const RepairPlan plan = plan_repair(inst);
  EXPECT_EQ(plan.cost, 4u);
  EXPECT_TRUE(verify_plan(plan, inst).feasible);
  EXPECT_TRUE(verify_plan({worked_reference_solution(), 4, false, 0}, inst).feasible);
  EXPECT_EQ(brute_force_plan(inst, PlanDomain::kFull).cost, 4u);
}

TEST(PlanRepair, SatisfiedInstanceIsLeftAlone) {
  RepairInstance inst;
  inst.votes = LabelMatrix::from_rows({{1, 1}, {2, 2}});
  inst.truth = {1, 2};
  inst.label_count = 3;
  const RepairPlan plan = plan_repair(inst);
  EXPECT_EQ(plan.cost, 0u);
  EXPECT_EQ(plan.target, inst.votes);
}

TEST(PlanRepair, EvidenceForcesTheSingleCell) {
  const RepairPlan plan = plan_repair(one_cell(kAbstain, 1, {Ratio(1, 2), Ratio(1), Ratio(1, 2), AccuracyBase::kVoted}));
  EXPECT_EQ(plan.cost, 1u);
  EXPECT_EQ(plan.target, LabelMatrix::from_rows({{1}}));
}

TEST(PlanRepair, TiesBreakTowardKeepThenAbstain) {
  // A wrong single vote with zero evidence demand: abstaining and correcting
  // both cost 1, abstain comes first.
  const RepairPlan plan = plan_repair(one_cell(2, 1, {Ratio(1), Ratio(0), Ratio(1), AccuracyBase::kVoted}));
  EXPECT_EQ(plan.cost, 1u);
  EXPECT_EQ(plan.target, LabelMatrix::from_rows({{kAbstain}}));
}

TEST(PlanRepair, InvalidInstancesAreRejected) {
  RepairInstance inst = worked_instance();
  inst.truth[0] = kAbstain;
  EXPECT_THROW(plan_repair(inst), Error);
  inst = worked_instance();
  inst.truth.pop_back();
  EXPECT_THROW(plan_repair(inst), Error);
  inst = worked_instance();
  inst.thresholds.evidence = Ratio(3, 2);
  EXPECT_THROW(plan_repair(inst), Error);
}

TEST(PlanRepair, MatchesReducedBruteForceOnRandomInstances) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    RepairInstance inst = random_instance(rng, 5, 4, 4, 20);
    if (trial % 3 == 0) inst.thresholds.base = AccuracyBase::kAll;
    const RepairPlan plan = plan_repair(inst);
    const RepairPlan brute = brute_force_plan(inst);
    ASSERT_EQ(plan.cost, brute.cost) << "trial " << trial;
    EXPECT_EQ(plan.target, brute.target) << "lexicographic tie-break differs, trial " << trial;
    EXPECT_TRUE(verify_plan(plan, inst).feasible);
    EXPECT_LE(plan.cost, wrong_cells(inst));
  }
}

TEST(PlanRepair, ReducedDomainLosesNothingAgainstFullDomain) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 150; ++trial) {
    RepairInstance inst = random_instance(rng, 4, 3, 4, 12);
    if (trial % 2 == 0) inst.thresholds.base = AccuracyBase::kAll;
    EXPECT_EQ(brute_force_plan(inst, PlanDomain::kFull).cost, brute_force_plan(inst, PlanDomain::kReduced).cost);
  }
}

// With accuracy above one half and some evidence, every feasible row has the
// truth as a strict majority of its votes.
TEST(PlanRepair, MajorityPropertyOfFeasiblePlans) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    RepairInstance inst = random_instance(rng, 6, 5, 4);
    inst.thresholds.accuracy = Ratio(51 + static_cast<std::int64_t>(rng() % 50), 100);
    if (inst.thresholds.evidence == Ratio(0)) inst.thresholds.evidence = Ratio(1, 5);
    const RepairPlan plan = plan_repair(inst);
    const auto predictions = labels_of(majority_vote(plan.target, inst.label_count));
    EXPECT_EQ(predictions, inst.truth);
  }
}

TEST(PlanRepair, AnytimeReturnsAFeasiblePlan) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const RepairInstance inst = random_instance(rng, 30, 6, 3);
    const RepairPlan exact = plan_repair(inst);
    const RepairPlan quick = plan_repair(inst, {SolveMode::kAnytime, std::chrono::milliseconds(0)});
    EXPECT_TRUE(verify_plan(quick, inst).feasible);
    EXPECT_GE(quick.cost, exact.cost);
    if (quick.optimal) EXPECT_EQ(quick.cost, exact.cost);
  }
}

TEST(PlanRepair, IsDeterministic) {
  std::mt19937_64 rng(67);
  const RepairInstance inst = random_instance(rng, 40, 5, 3);
  EXPECT_EQ(plan_repair(inst).target, plan_repair(inst).target);
}

TEST(BruteForcePlan, SizeGuards) {
  RepairInstance inst;
  inst.votes = LabelMatrix(5, 3, 1);
  inst.truth.assign(5, 1);
  inst.label_count = 3;
  EXPECT_THROW(brute_force_plan(inst, PlanDomain::kFull), Error);
  EXPECT_NO_THROW(brute_force_plan(inst, PlanDomain::kReduced));
  inst.votes = LabelMatrix(7, 3, 1);
  inst.truth.assign(7, 1);
  try {
    brute_force_plan(inst, PlanDomain::kReduced);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSizeGuard);
  }
}

TEST(ExportProgram, SingleCellSnapshot) {
  const std::string expected =
      "\\ rule repair program: n=1 m=1 labels=3\n"
      "Minimize\n"
      " obj: m_0_0\n"
      "Subject To\n"
      " mu_0_0: o_0_0 - 3 m_0_0 <= 0\n"
      " ml_0_0: o_0_0 + 3 m_0_0 >= 0\n"
      " cu_0_0: o_0_0 + 3 c_0_0 <= 4\n"
      " cl_0_0: o_0_0 - 3 c_0_0 >= -2\n"
      " eu_0_0: o_0_0 - 3 e_0_0 <= 0\n"
      " el_0_0: o_0_0 - e_0_0 >= 0\n"
      " acc_0: 2 c_0_0 - 1 e_0_0 >= 0\n"
      " evid_0: 1 e_0_0 >= 1\n"
      " racc_0: 2 c_0_0 - 1 e_0_0 >= 0\n"
      "Bounds\n"
      " 0 <= o_0_0 <= 2\n"
      "General\n"
      " o_0_0\n"
      "Binary\n"
      " m_0_0 c_0_0 e_0_0\n"
      "End\n";
  EXPECT_EQ(export_program(one_cell(kAbstain, 1, {Ratio(1, 2), Ratio(1), Ratio(1, 2), AccuracyBase::kVoted})), expected);
}

TEST(ExportProgram, CountsScaleWithInstance) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const RepairInstance inst = random_instance(rng, 6, 4, 3);
    const std::string lp = export_program(inst);
    std::size_t constraints = 0;
    std::istringstream in(lp);
    bool in_constraints = false;
    std::set<std::string> variables;
    for (std::string line; std::getline(in, line);) {
      if (line == "Subject To") in_constraints = true;
      else if (line == "Bounds") in_constraints = false;
      else if (in_constraints) ++constraints;
      std::istringstream words(line);
      for (std::string w; words >> w;) {
        if (w.size() > 2 && (w[0] == 'o' || w[0] == 'm' || w[0] == 'c' || w[0] == 'e') && w[1] == '_' &&
            w.back() != ':') {
          variables.insert(w);
        }
      }
    }
    EXPECT_EQ(constraints, 6 * inst.n() * inst.m() + 2 * inst.n() + inst.m());
    EXPECT_EQ(variables.size(), 4 * inst.n() * inst.m());
  }
}
