#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace rulerepair;
using namespace fixtures;

namespace {

bool all_hold(const RuleTree& rule, const TargetedLabels& z) {
  for (const auto& t : z) {
    if (evaluate(rule, t.point) != t.label) return false;
  }
  return true;
}

const PathAlgorithm kAlgorithms[] = {PathAlgorithm::kEntropy, PathAlgorithm::kGreedy, PathAlgorithm::kBrute};

// Up to `size` datapoints with pairwise different token sets.
TargetedLabels random_targets(std::mt19937_64& rng, std::size_t size, std::size_t label_count) {
  TargetedLabels z;
  for (std::size_t attempts = 0; z.size() < size && attempts < 200; ++attempts) {
    Datapoint x = random_datapoint(rng, "x" + std::to_string(z.size()), 6);
    bool distinct = true;
    for (const auto& t : z) distinct = distinct && !t.point.indistinguishable_from(x);
    if (distinct) z.push_back({std::move(x), static_cast<LabelId>(rng() % label_count)});
  }
  return z;
}

}  // namespace

TEST(Gini, AnalyticValues) {
  EXPECT_EQ(gini(std::vector<LabelId>{1, 1}), Ratio(0));
  EXPECT_EQ(gini(std::vector<LabelId>{1, 2}), Ratio(1, 2));
  EXPECT_EQ(gini(std::vector<LabelId>{1, 1, 2, 2, 3, 3}), Ratio(2, 3));
  EXPECT_THROW(gini(std::vector<LabelId>{}), Error);
}

TEST(Gini, UniformMultisetOfKLabels) {
  for (LabelId k = 1; k <= 6; ++k) {
    std::vector<LabelId> labels;
    for (LabelId y = 0; y < k; ++y) labels.insert(labels.end(), 3, y);
    EXPECT_EQ(gini(labels), Ratio(k - 1, k));
  }
}

TEST(SplitScore, PureHalvesScoreZero) {
  const TargetedLabels z{{Datapoint("a", "x"), 1}, {Datapoint("b", "x y"), 1},
                         {Datapoint("c", "z"), 2}, {Datapoint("d", "z w"), 2}};
  EXPECT_EQ(split_score(z, contains_word("x")), Ratio(0));
}

TEST(SplitScore, ConstantPredicateScoresTheWholeSet) {
  const TargetedLabels z{{Datapoint("a", "x"), 1}, {Datapoint("b", "x y"), 2}, {Datapoint("c", "x z"), 2}};
  EXPECT_EQ(split_score(z, contains_word("x")), gini(std::vector<LabelId>{1, 2, 2}));
  EXPECT_EQ(split_score(z, contains_word("absent")), gini(std::vector<LabelId>{1, 2, 2}));
}

TEST(SplitScore, StarsExampleGreatIsPure) {
  EXPECT_EQ(split_score(stars_targets(), contains_word("great")), Ratio(0));
}

TEST(EntropyRepair, StarsExampleCostsOneSplit) {
  const RefinementSequence seq = entropy_path_repair(stars_rule(), Path{"1"}, stars_targets());
  ASSERT_EQ(seq.rcost(), 1u);
  EXPECT_EQ(seq.steps[0].kind, StepKind::kSplit);
  EXPECT_EQ(split_score(stars_targets(), seq.steps[0].predicate), Ratio(0));
  EXPECT_TRUE(all_hold(apply_sequence(stars_rule(), seq), stars_targets()));
}

TEST(EntropyRepair, PureMatchingSetNeedsNothing) {
  const TargetedLabels z{{Datapoint("a", "waste"), NEG}, {Datapoint("b", "waste time"), NEG}};
  EXPECT_TRUE(entropy_path_repair(waste_rule(), Path{"1"}, z).empty());
}

TEST(EntropyRepair, PureDifferingSetIsOneRelabel) {
  const TargetedLabels z{{Datapoint("a", "waste"), POS}, {Datapoint("b", "waste time"), POS}};
  const RefinementSequence seq = entropy_path_repair(waste_rule(), Path{"1"}, z);
  ASSERT_EQ(seq.rcost(), 1u);
  EXPECT_EQ(seq.steps[0], RefinementStep::relabel(Path{"1"}, POS));
  EXPECT_TRUE(all_hold(apply_sequence(waste_rule(), seq), z));
}

TEST(EntropyRepair, IndistinguishablePairIsReported) {
  const TargetedLabels z{{Datapoint("a", "waste it"), POS}, {Datapoint("b", "it waste"), NEG}};
  try {
    entropy_path_repair(waste_rule(), Path{"1"}, z);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoSeparator);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(EntropyRepair, DatapointOffThePathIsRejected) {
  const TargetedLabels z{{Datapoint("a", "great"), POS}};
  EXPECT_THROW(entropy_path_repair(waste_rule(), Path{"1"}, z), Error);
}

TEST(GreedyRepair, StarsExampleIsCorrectWithinTwoSteps) {
  const RefinementSequence seq = greedy_path_repair(stars_rule(), Path{"1"}, stars_targets());
  EXPECT_GE(seq.rcost(), 1u);
  EXPECT_LE(seq.rcost(), 2u);
  EXPECT_TRUE(all_hold(apply_sequence(stars_rule(), seq), stars_targets()));
}

TEST(GreedyRepair, SingletonDifferingIsOneRelabel) {
  const TargetedLabels z{{Datapoint("a", "waste"), POS}};
  const RefinementSequence seq = greedy_path_repair(waste_rule(), Path{"1"}, z);
  ASSERT_EQ(seq.rcost(), 1u);
  EXPECT_EQ(seq.steps[0].kind, StepKind::kRelabel);
}

TEST(GreedyRepair, RandomSixPointSetsWithinBound) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const RuleTree rule = RuleTree::leaf(1);
    const TargetedLabels z = random_targets(rng, 6, 2);
    TargetedLabels shifted;
    for (const auto& t : z) shifted.push_back({t.point, static_cast<LabelId>(t.label + 1)});
    const RefinementSequence seq = greedy_path_repair(rule, Path{}, shifted);
    EXPECT_LE(seq.rcost(), shifted.size());
    EXPECT_TRUE(all_hold(apply_sequence(rule, seq), shifted));
  }
}

TEST(BruteRepair, StarsExampleIsExactlyOne) {
  const RefinementSequence seq = brute_force_path_repair(stars_rule(), Path{"1"}, stars_targets());
  EXPECT_EQ(seq.rcost(), 1u);
  EXPECT_TRUE(all_hold(apply_sequence(stars_rule(), seq), stars_targets()));
}

TEST(BruteRepair, PureMatchingSetCostsZero) {
  const TargetedLabels z{{Datapoint("a", "waste"), NEG}};
  EXPECT_EQ(brute_force_path_repair(waste_rule(), Path{"1"}, z).rcost(), 0u);
}

TEST(BruteRepair, GuardRejectsLargePaths) {
  std::mt19937_64 rng(2);
  TargetedLabels z;
  for (int k = 0; k < 9; ++k) z.push_back({Datapoint("p" + std::to_string(k), "w" + std::to_string(k)), k % 2 ? 1 : 2});
  try {
    brute_force_path_repair(RuleTree::leaf(1), Path{}, z);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSizeGuard);
  }
}

TEST(BruteRepair, NeverWorseThanEntropyOnFourPoints) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const TargetedLabels z = random_targets(rng, 4, 3);
    const RuleTree rule = RuleTree::leaf(static_cast<LabelId>(rng() % 3));
    const auto brute = brute_force_path_repair(rule, Path{}, z);
    const auto entropy = entropy_path_repair(rule, Path{}, z);
    EXPECT_LE(brute.rcost(), entropy.rcost());
    EXPECT_LE(entropy.rcost(), z.size());
  }
}

TEST(SingleRuleRefine, StarRuleOnAmazonReviews) {
  const RuleSet set = parse_rule_set(kAmazonRules);
  const RuleTree lf1 = set.rules[0].tree;
  const auto reviews = amazon_reviews();
  const TargetedLabels z{{reviews[0], POS}, {reviews[1], NEG}, {reviews[2], POS}, {reviews[3], NEG}};
  for (const PathAlgorithm algo : kAlgorithms) {
    const RuleTree refined = apply_sequence(lf1, single_rule_refine(lf1, z, algo));
    EXPECT_TRUE(all_hold(refined, z)) << to_string(algo);
    EXPECT_EQ(evaluate(refined, reviews[1]), NEG);
  }
}

TEST(SingleRuleRefine, MatchingTargetsGiveEmptySequence) {
  const TargetedLabels z{{Datapoint("a", "waste"), NEG}, {Datapoint("b", "fine"), kAbstain}};
  EXPECT_TRUE(single_rule_refine(waste_rule(), z, PathAlgorithm::kEntropy).empty());
}

TEST(SingleRuleRefine, PathRepairsCommute) {
  const TargetedLabels z{{Datapoint("a", "waste great"), POS}, {Datapoint("b", "waste bad"), NEG},
                         {Datapoint("c", "fine"), POS}, {Datapoint("d", "meh"), kAbstain}};
  const RefinementSequence seq = single_rule_refine(waste_rule(), z, PathAlgorithm::kEntropy);
  std::map<std::string, RefinementSequence> by_path;
  for (const auto& s : seq.steps) by_path[s.path.bits.substr(0, 1)].steps.push_back(s);
  ASSERT_EQ(by_path.size(), 2u);
  RefinementSequence reversed;
  for (auto it = by_path.rbegin(); it != by_path.rend(); ++it) reversed.append(it->second);
  const RuleTree forward = apply_sequence(waste_rule(), seq);
  const RuleTree backward = apply_sequence(waste_rule(), reversed);
  EXPECT_EQ(forward, backward);
  EXPECT_TRUE(all_hold(forward, z));
}

TEST(ApplyRepairPlan, ReferenceWorkedSolutionIsReproduced) {
  // Three datapoints with disjoint vocabularies; rules produce the worked votes.
  const std::vector<Datapoint> xs{Datapoint("x1", "aa bb cc"), Datapoint("x2", "dd ee ff"), Datapoint("x3", "gg hh ii")};
  const LabelMatrix votes = worked_instance().votes;
  std::vector<RuleTree> rules;
  for (std::size_t j = 0; j < 3; ++j) {
    RuleTree r = RuleTree::leaf(kAbstain);
    for (std::size_t i = 0; i < 3; ++i) {
      if (votes.at(i, j) != kAbstain) r = RuleTree::inner(contains_word(xs[i].tokens()[0]), r, RuleTree::leaf(votes.at(i, j)));
    }
    rules.push_back(r);
  }
  ASSERT_EQ(apply_rules(rules, xs), votes);
  const LabelMatrix target = worked_reference_solution();
  const RepairedRules repaired = apply_repair_plan(rules, target, xs, PathAlgorithm::kEntropy);
  EXPECT_EQ(apply_rules(repaired.rules, xs), target);
}

TEST(ApplyRepairPlan, IdentityPlanLeavesRulesUnchanged) {
  const RuleSet set = parse_rule_set(kAmazonRules);
  const auto xs = amazon_reviews();
  const LabelMatrix votes = apply_rules(set.trees(), xs);
  const RepairedRules repaired = apply_repair_plan(set.trees(), votes, xs, PathAlgorithm::kGreedy);
  for (std::size_t j = 0; j < repaired.rules.size(); ++j) {
    EXPECT_TRUE(repaired.sequences[j].empty());
    EXPECT_EQ(repaired.rules[j], set.rules[j].tree);
  }
}

TEST(ApplyRepairPlan, AmazonPlanIsFeasibleAfterRefinement) {
  const RuleSet set = parse_rule_set(kAmazonRules);
  const auto xs = amazon_reviews();
  RepairInstance inst;
  inst.votes = apply_rules(set.trees(), xs);
  for (const auto& x : xs) inst.truth.push_back(*x.truth());
  inst.thresholds = {Ratio(3, 5), Ratio(1, 3), Ratio(3, 5), AccuracyBase::kVoted};
  inst.label_count = 3;
  const RepairPlan plan = plan_repair(inst);
  for (const PathAlgorithm algo : kAlgorithms) {
    const RepairedRules repaired = apply_repair_plan(set.trees(), plan, xs, algo);
    const LabelMatrix after = apply_rules(repaired.rules, xs);
    EXPECT_EQ(after, plan.target);
    EXPECT_TRUE(verify_plan({after, repair_cost(inst.votes, after), true, 0}, inst).feasible);
  }
}

// Correctness over random rules and targets: every algorithm realizes every
// desired label, each per-path repair stays within |Z_P| steps, and brute
// force is never beaten when it runs.
TEST(PathRepairProperty, RandomInstancesAreRepairedCorrectly) {
  std::mt19937_64 rng(2024);
  std::size_t checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const std::size_t label_count = 2 + rng() % 2;
    const RuleTree rule = random_rule(rng, label_count, 3);
    const TargetedLabels z = random_targets(rng, 1 + rng() % 10, label_count);
    std::map<Path, TargetedLabels> by_path;
    for (const auto& t : z) by_path[path_of(rule, t.point)].push_back(t);

    for (const auto& [path, zp] : by_path) {
      std::map<PathAlgorithm, std::size_t> cost;
      for (const PathAlgorithm algo : kAlgorithms) {
        if (algo == PathAlgorithm::kBrute && zp.size() > kBrutePathLimit) continue;
        const RefinementSequence seq = repair_path(algo, rule, path, zp);
        EXPECT_LE(seq.rcost(), zp.size()) << to_string(algo);
        EXPECT_TRUE(all_hold(apply_sequence(rule, seq), zp)) << to_string(algo);
        cost[algo] = seq.rcost();
      }
      if (cost.count(PathAlgorithm::kBrute)) {
        EXPECT_LE(cost[PathAlgorithm::kBrute], cost[PathAlgorithm::kEntropy]);
        EXPECT_LE(cost[PathAlgorithm::kBrute], cost[PathAlgorithm::kGreedy]);
      }
    }
    for (const PathAlgorithm algo : {PathAlgorithm::kEntropy, PathAlgorithm::kGreedy}) {
      EXPECT_TRUE(all_hold(apply_sequence(rule, single_rule_refine(rule, z, algo)), z));
    }
    ++checked;
  }
  EXPECT_GE(checked, 200u);
}

TEST(PathAlgorithmNames, RoundTrip) {
  for (const PathAlgorithm algo : kAlgorithms) EXPECT_EQ(parse_path_algorithm(to_string(algo)), algo);
  EXPECT_THROW(parse_path_algorithm("random"), Error);
}
