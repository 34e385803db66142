#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

using namespace rulerepair;
using namespace fixtures;

namespace fs = std::filesystem;

namespace {

PipelineConfig amazon_config() {
  PipelineConfig config;
  config.thresholds = {Ratio(3, 5), Ratio(1, 3), Ratio(3, 5), AccuracyBase::kVoted};
  config.use_all_labeled = true;
  return config;
}

std::vector<Datapoint> pool(std::size_t right, std::size_t wrong, std::vector<LabelId>& before) {
  std::vector<Datapoint> xs;
  before.clear();
  for (std::size_t k = 0; k < right + wrong; ++k) {
    xs.emplace_back("p" + std::to_string(k), "text", std::map<std::string, std::string>{}, POS);
    before.push_back(k < right ? POS : NEG);
  }
  return xs;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rulerepair-pipeline-" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(SampleSeedSet, BalancedWhenBothStrataSuffice) {
  std::vector<LabelId> before;
  const auto xs = pool(10, 10, before);
  const SeedSample s = sample_seed_set(xs, before, 6, 1);
  EXPECT_EQ(s.correct, 3u);
  EXPECT_EQ(s.wrong, 3u);
  EXPECT_TRUE(s.warnings.empty());
  EXPECT_TRUE(std::is_sorted(s.indices.begin(), s.indices.end()));
}

TEST(SampleSeedSet, ShortStratumFallsBackWithWarning) {
  std::vector<LabelId> before;
  const auto xs = pool(10, 1, before);
  const SeedSample s = sample_seed_set(xs, before, 6, 1);
  EXPECT_EQ(s.correct, 5u);
  EXPECT_EQ(s.wrong, 1u);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(SampleSeedSet, OddSizeFavoursCorrect) {
  std::vector<LabelId> before;
  const auto xs = pool(10, 10, before);
  const SeedSample s = sample_seed_set(xs, before, 7, 3);
  EXPECT_EQ(s.correct, 4u);
  EXPECT_EQ(s.wrong, 3u);
}

TEST(SampleSeedSet, SameSeedSameSample) {
  std::vector<LabelId> before;
  const auto xs = pool(30, 30, before);
  EXPECT_EQ(sample_seed_set(xs, before, 10, 42).indices, sample_seed_set(xs, before, 10, 42).indices);
  EXPECT_NE(sample_seed_set(xs, before, 10, 42).indices, sample_seed_set(xs, before, 10, 43).indices);
}

TEST(SampleSeedSet, PreconditionsAreChecked) {
  std::vector<LabelId> before;
  const auto xs = pool(3, 3, before);
  EXPECT_THROW(sample_seed_set(xs, before, 0, 1), Error);
  EXPECT_THROW(sample_seed_set(xs, before, 1, 1), Error);
  EXPECT_THROW(sample_seed_set(xs, before, 7, 1), Error);
  EXPECT_THROW(sample_seed_set({}, {}, 2, 1), Error);
}

TEST(ParseSolver, ExactAndAnytime) {
  EXPECT_EQ(parse_solver("exact").mode, SolveMode::kExact);
  const SolveOptions a = parse_solver("anytime:1.5");
  EXPECT_EQ(a.mode, SolveMode::kAnytime);
  EXPECT_EQ(a.budget.count(), 1500);
  EXPECT_EQ(solver_text(a), "anytime:1.5");
  EXPECT_THROW(parse_solver("anytime:"), Error);
  EXPECT_THROW(parse_solver("fast"), Error);
}

TEST(RunRepair, AmazonReviewsBecomeCorrectUnderMajorityVote) {
  const RuleSet rules = parse_rule_set(kAmazonRules);
  const auto xs = amazon_reviews();
  const PipelineResult result = run_repair(rules, xs, amazon_config());
  std::vector<LabelId> truth;
  for (const auto& x : xs) truth.push_back(*x.truth());
  EXPECT_EQ(result.after, truth);
  EXPECT_TRUE(result.report.plan_reproduced);
  EXPECT_TRUE(result.report.feasible);
  EXPECT_EQ(result.report.deltas.global_after, Ratio(1));
}

TEST(RunRepair, EveryPathAlgorithmReproducesThePlan) {
  const RuleSet rules = parse_rule_set(kAmazonRules);
  for (const PathAlgorithm algo : {PathAlgorithm::kEntropy, PathAlgorithm::kGreedy, PathAlgorithm::kBrute}) {
    PipelineConfig config = amazon_config();
    config.path_algorithm = algo;
    const PipelineResult result = run_repair(rules, amazon_reviews(), config);
    EXPECT_TRUE(result.report.plan_reproduced) << to_string(algo);
    EXPECT_EQ(result.report.cost, result.plan.cost);
  }
}

TEST(RunRepair, ReportedCostIsTheSeedSetHammingDistance) {
  const RuleSet rules = parse_rule_set(kAmazonRules);
  const auto xs = amazon_reviews();
  const PipelineResult result = run_repair(rules, xs, amazon_config());
  const LabelMatrix before = apply_rules(rules.trees(), xs);
  const LabelMatrix after = apply_rules(result.refined.trees(), xs);
  EXPECT_EQ(result.report.cost, repair_cost(before, after));
}

TEST(RunRepair, SeedSizeZeroIsAPreconditionError) {
  SyntheticSpec spec;
  spec.documents = 40;
  const SyntheticBenchmark bench = make_synthetic_benchmark(spec);
  PipelineConfig config;
  config.seed_size = 0;
  try {
    run_repair(bench.rules, bench.documents, config);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage sample"), std::string::npos);
  }
}

TEST(RunRepair, SyntheticBenchmarkImproves) {
  SyntheticSpec spec;
  spec.seed = 7;
  const SyntheticBenchmark bench = make_synthetic_benchmark(spec);
  PipelineConfig config;
  config.seed = 7;
  const PipelineResult result = run_repair(bench.rules, bench.documents, config);
  EXPECT_GE(result.report.deltas.global_after, result.report.deltas.global_before);
  EXPECT_TRUE(result.report.plan_reproduced);
  EXPECT_TRUE(result.report.feasible);
  EXPECT_EQ(result.report.seed_ids.size(), 40u);
}

TEST(RunRepair, EmModelRunsEndToEnd) {
  SyntheticSpec spec;
  spec.seed = 3;
  const SyntheticBenchmark bench = make_synthetic_benchmark(spec);
  PipelineConfig config;
  config.model = LabelModelSpec::parse("em");
  const PipelineResult result = run_repair(bench.rules, bench.documents, config);
  EXPECT_TRUE(result.report.plan_reproduced);
}

TEST(Synthetic, RuleNoiseIsInTheRequestedBand) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const SyntheticBenchmark bench = make_synthetic_benchmark(spec);
    ASSERT_EQ(bench.documents.size(), 500u);
    const LabelMatrix votes = apply_rules(bench.rules.trees(), bench.documents);
    std::vector<LabelId> truth;
    for (const auto& x : bench.documents) truth.push_back(*x.truth());
    for (std::size_t j = 0; j < votes.cols(); ++j) {
      const double accuracy = rule_accuracy(votes.column(j), truth, Denominator::kNonAbstain).to_double();
      EXPECT_GE(1 - accuracy, 0.2) << "seed " << seed << " rule " << j;
      EXPECT_LE(1 - accuracy, 0.3) << "seed " << seed << " rule " << j;
    }
  }
}

TEST(EmitReport, FilesAndKeys) {
  const fs::path dir = fresh_dir("keys");
  const fs::path rules_path = dir / "rules.json";
  const fs::path data_path = dir / "data.jsonl";
  write_file(rules_path, kAmazonRules);
  write_file(data_path, serialize_dataset(amazon_reviews(), sentiment_labels()));
  PipelineConfig config = amazon_config();
  config.rules_path = rules_path;
  config.data_path = data_path;
  config.out_dir = dir / "out";
  run_repair_pipeline(config);
  for (const char* name : {"report.json", "rule_accuracy.csv", "refined_rules.json", "audit.json"}) {
    EXPECT_TRUE(fs::exists(config.out_dir / name)) << name;
  }
  const Json report = Json::parse(read_file(config.out_dir / "report.json"));
  for (const char* key : {"global_before", "global_after", "fix_pct", "preserve_pct", "cost"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_EQ(report["global_after"], 1.0);
  const RuleSet refined = parse_rule_set(read_file(config.out_dir / "refined_rules.json"));
  EXPECT_EQ(apply_rules(refined.trees(), amazon_reviews()),
            run_repair(parse_rule_set(kAmazonRules), amazon_reviews(), amazon_config()).plan.target);
}

TEST(EmitReport, TwoRunsAreByteIdentical) {
  SyntheticSpec spec;
  spec.seed = 2;
  const SyntheticBenchmark bench = make_synthetic_benchmark(spec);
  const fs::path dir = fresh_dir("determinism");
  write_file(dir / "rules.json", serialize_rule_set(bench.rules));
  write_file(dir / "data.jsonl", serialize_dataset(bench.documents, bench.rules.labels));
  PipelineConfig config;
  config.rules_path = dir / "rules.json";
  config.data_path = dir / "data.jsonl";
  config.seed = 11;
  config.out_dir = dir / "a";
  run_repair_pipeline(config);
  config.out_dir = dir / "b";
  run_repair_pipeline(config);
  for (const char* name : {"report.json", "rule_accuracy.csv", "refined_rules.json", "audit.json"}) {
    EXPECT_EQ(read_file(dir / "a" / name), read_file(dir / "b" / name)) << name;
  }
}

TEST(RunRepairPipeline, MissingFilesNameTheStage) {
  PipelineConfig config;
  config.rules_path = "/nonexistent/rules.json";
  try {
    run_repair_pipeline(config);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("stage load-rules"), std::string::npos);
  }
}
