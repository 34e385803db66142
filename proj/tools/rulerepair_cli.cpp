#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "rulerepair/rulerepair.hpp"

namespace rr = rulerepair;

namespace {

rr::Ratio threshold(const std::string& text, const char* what) {
  const rr::Ratio r = rr::Ratio::parse(text);
  if (r < rr::Ratio(0) || r > rr::Ratio(1)) rr::fail(rr::ErrorKind::kInvalidArgument, std::string(what) + " must lie in [0, 1]");
  return r;
}

rr::AccuracyBase accuracy_base(const std::string& text) {
  if (text == "voted") return rr::AccuracyBase::kVoted;
  if (text == "all") return rr::AccuracyBase::kAll;
  rr::fail(rr::ErrorKind::kInvalidArgument, "accuracy base must be 'voted' or 'all'");
}

struct RefineArgs {
  std::string rules, data, out;
  std::string acc = "0.7", evidence = "0.7", racc = "0.7", base = "voted";
  std::size_t seed_size = 40;
  std::string path_algo = "entropy", model = "majority", solver = "exact";
  std::uint64_t seed = 0;
  bool all_labeled = false;
};

int run_refine(const RefineArgs& a) {
  rr::PipelineConfig config;
  config.rules_path = a.rules;
  config.data_path = a.data;
  config.out_dir = a.out;
  config.thresholds.accuracy = threshold(a.acc, "--acc");
  config.thresholds.evidence = threshold(a.evidence, "--evidence");
  config.thresholds.rule_accuracy = threshold(a.racc, "--racc");
  config.thresholds.base = accuracy_base(a.base);
  config.seed_size = a.seed_size;
  config.path_algorithm = rr::parse_path_algorithm(a.path_algo);
  config.model = rr::LabelModelSpec::parse(a.model);
  config.seed = a.seed;
  config.solver = rr::parse_solver(a.solver);
  config.use_all_labeled = a.all_labeled;

  const rr::PipelineResult result = rr::run_repair_pipeline(config);
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << rr::report_to_json(result.report, config).dump(2) << "\n";
  return 0;
}

struct PlanArgs {
  std::string votes, header, solver = "exact", lp, brute;
};

int run_plan(const PlanArgs& a) {
  const rr::RepairInstance inst = rr::read_instance(rr::read_file(a.votes), rr::read_file(a.header));
  if (!a.lp.empty()) rr::write_file(a.lp, rr::export_program(inst));
  rr::RepairPlan plan;
  if (a.brute.empty()) {
    plan = rr::plan_repair(inst, rr::parse_solver(a.solver));
  } else if (a.brute == "reduced" || a.brute == "full") {
    plan = rr::brute_force_plan(inst, a.brute == "full" ? rr::PlanDomain::kFull : rr::PlanDomain::kReduced);
  } else {
    rr::fail(rr::ErrorKind::kInvalidArgument, "--brute must be 'reduced' or 'full'");
  }
  rr::Json out = rr::plan_to_json(plan);
  out["feasible"] = rr::verify_plan(plan, inst).feasible;
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct RepairRuleArgs {
  std::string rules, rule, targets, path_algo = "entropy", out;
};

int run_repair_rule(const RepairRuleArgs& a) {
  rr::RuleSet set = rr::parse_rule_set(rr::read_file(a.rules));
  const auto registry = rr::registry_for(set);
  auto it = std::find_if(set.rules.begin(), set.rules.end(), [&](const rr::NamedRule& r) { return r.name == a.rule; });
  if (it == set.rules.end()) rr::fail(rr::ErrorKind::kInvalidArgument, "no rule named '" + a.rule + "'");

  rr::TargetedLabels z;
  for (auto& x : rr::load_dataset(a.targets, set.labels, true)) {
    if (!x.truth()) rr::fail(rr::ErrorKind::kParse, "target '" + x.id() + "' has no desired label");
    const rr::LabelId y = *x.truth();
    z.push_back({std::move(x), y});
  }
  const rr::RefinementSequence seq =
      rr::single_rule_refine(it->tree, z, rr::parse_path_algorithm(a.path_algo), *registry);
  it->tree = rr::apply_sequence(it->tree, seq);

  rr::Json out;
  out["rule"] = a.rule;
  out["rcost"] = seq.rcost();
  out["steps"] = rr::sequence_to_json(seq, set.labels);
  out["tree"] = rr::rule_to_json(it->tree, set.labels);
  if (!a.out.empty()) rr::write_file(a.out, rr::serialize_rule_set(set));
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string rules, data, model = "majority", votes_out;
};

int run_eval(const EvalArgs& a) {
  const rr::RuleSet set = rr::parse_rule_set(rr::read_file(a.rules));
  const auto registry = rr::registry_for(set);
  const auto xs = rr::load_dataset(a.data, set.labels);
  const rr::LabelMatrix votes = rr::apply_rules(set.trees(), xs, *registry);
  if (!a.votes_out.empty()) rr::write_file(a.votes_out, rr::write_votes_csv(votes, set.labels));
  const auto predictions = rr::predict(rr::LabelModelSpec::parse(a.model), votes, set.labels);

  std::vector<std::size_t> labeled;
  std::vector<rr::LabelId> truth, predicted;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].truth()) continue;
    labeled.push_back(i);
    truth.push_back(*xs[i].truth());
    predicted.push_back(predictions[i]);
  }
  const rr::LabelMatrix lv = votes.select_rows(labeled);

  rr::Json out;
  out["datapoints"] = xs.size();
  out["labeled"] = labeled.size();
  out["global_accuracy"] = rr::global_accuracy(predicted, truth).to_double();
  rr::Json rules = rr::Json::array();
  for (std::size_t j = 0; j < set.rules.size(); ++j) {
    rr::Json r;
    r["name"] = set.rules[j].name;
    r["accuracy"] = labeled.empty() ? 0.0 : rr::rule_accuracy(lv.column(j), truth, rr::Denominator::kNonAbstain).to_double();
    rules.push_back(std::move(r));
  }
  out["rules"] = std::move(rules);
  rr::Json preds = rr::Json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) preds.push_back({{"id", xs[i].id()}, {"label", set.labels.name(predictions[i])}});
  out["predictions"] = std::move(preds);
  std::cout << out.dump(2) << "\n";
  return 0;
}

// Label-model protocol endpoint: reads votes.csv, writes one label id per row.
int run_vote(const std::string& method, const std::string& votes_path, const std::string& predictions_path) {
  const rr::VotesFile file = rr::read_votes_csv(rr::read_file(votes_path));
  std::vector<rr::LabelId> labels;
  if (method == "majority") {
    labels = rr::labels_of(rr::majority_vote(file.votes, file.labels.size()));
  } else if (method == "em") {
    labels = rr::labels_of(rr::em_weighted_vote(file.votes, file.labels.size()));
  } else {
    rr::fail(rr::ErrorKind::kInvalidArgument, "--method must be 'majority' or 'em'");
  }
  std::string text;
  for (const rr::LabelId y : labels) text += std::to_string(y) + "\n";
  rr::write_file(predictions_path, text);
  return 0;
}

int run_synth(std::uint64_t seed, std::size_t documents, std::size_t rules, double twisted, const std::string& out) {
  rr::SyntheticSpec spec;
  spec.seed = seed;
  spec.documents = documents;
  spec.rules = rules;
  spec.twisted_rate = twisted;
  const rr::SyntheticBenchmark bench = rr::make_synthetic_benchmark(spec);
  const std::filesystem::path dir(out);
  rr::write_file(dir / "rules.json", rr::serialize_rule_set(bench.rules));
  rr::write_file(dir / "data.jsonl", rr::serialize_dataset(bench.documents, bench.rules.labels));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repair labeling rules against a small labeled seed set"};
  app.require_subcommand(1);

  RefineArgs refine;
  auto* cmd_refine = app.add_subcommand("refine", "Run the full repair pipeline and write reports");
  cmd_refine->add_option("--rules", refine.rules, "Rule file (JSON)")->required()->envname("RULEREPAIR_RULES");
  cmd_refine->add_option("--data", refine.data, "Dataset (JSONL or CSV)")->required()->envname("RULEREPAIR_DATA");
  cmd_refine->add_option("--out", refine.out, "Output directory")->required()->envname("RULEREPAIR_OUT");
  cmd_refine->add_option("--seed-size", refine.seed_size, "Seed set size")->envname("RULEREPAIR_SEED_SIZE");
  cmd_refine->add_option("--acc", refine.acc, "Datapoint accuracy threshold")->envname("RULEREPAIR_ACC");
  cmd_refine->add_option("--evidence", refine.evidence, "Evidence threshold")->envname("RULEREPAIR_EVIDENCE");
  cmd_refine->add_option("--racc", refine.racc, "Rule accuracy threshold")->envname("RULEREPAIR_RACC");
  cmd_refine->add_option("--accuracy-base", refine.base, "voted | all")->envname("RULEREPAIR_ACCURACY_BASE");
  cmd_refine->add_option("--path-algo", refine.path_algo, "entropy | greedy | brute")->envname("RULEREPAIR_PATH_ALGO");
  cmd_refine->add_option("--model", refine.model, "majority | em | external:<cmd>")->envname("RULEREPAIR_MODEL");
  cmd_refine->add_option("--solver", refine.solver, "exact | anytime:<secs>")->envname("RULEREPAIR_SOLVER");
  cmd_refine->add_option("--seed", refine.seed, "Sampling seed")->envname("RULEREPAIR_SEED");
  cmd_refine->add_flag("--all-labeled", refine.all_labeled, "Use every labeled datapoint as the seed set");

  PlanArgs plan;
  auto* cmd_plan = app.add_subcommand("plan", "Solve a repair instance");
  cmd_plan->add_option("--votes", plan.votes, "Vote matrix CSV")->required();
  cmd_plan->add_option("--header", plan.header, "Instance header JSON")->required();
  cmd_plan->add_option("--solver", plan.solver, "exact | anytime:<secs>")->envname("RULEREPAIR_SOLVER");
  cmd_plan->add_option("--lp", plan.lp, "Also write the integer program in LP format");
  cmd_plan->add_option("--brute", plan.brute, "Enumerate instead: reduced | full");

  RepairRuleArgs repair;
  auto* cmd_repair = app.add_subcommand("repair-rule", "Refine one rule to produce desired labels");
  cmd_repair->add_option("--rules", repair.rules, "Rule file (JSON)")->required()->envname("RULEREPAIR_RULES");
  cmd_repair->add_option("--rule", repair.rule, "Rule name")->required();
  cmd_repair->add_option("--targets", repair.targets, "Datapoints with desired labels")->required();
  cmd_repair->add_option("--path-algo", repair.path_algo, "entropy | greedy | brute")->envname("RULEREPAIR_PATH_ALGO");
  cmd_repair->add_option("--out", repair.out, "Write the updated rule file here");

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "Apply rules and a label model to a dataset");
  cmd_eval->add_option("--rules", eval.rules, "Rule file (JSON)")->required()->envname("RULEREPAIR_RULES");
  cmd_eval->add_option("--data", eval.data, "Dataset (JSONL or CSV)")->required()->envname("RULEREPAIR_DATA");
  cmd_eval->add_option("--model", eval.model, "majority | em | external:<cmd>")->envname("RULEREPAIR_MODEL");
  cmd_eval->add_option("--votes-out", eval.votes_out, "Write the vote matrix as votes.csv");

  std::string vote_method = "majority", vote_in, vote_out;
  auto* cmd_vote = app.add_subcommand("vote", "Label-model endpoint for external:<cmd>");
  cmd_vote->add_option("--method", vote_method, "majority | em");
  cmd_vote->add_option("votes", vote_in, "votes.csv")->required();
  cmd_vote->add_option("predictions", vote_out, "predictions.csv")->required();

  std::uint64_t synth_seed = 1;
  std::size_t synth_docs = 500, synth_rules = 5;
  double synth_twisted = 0.3;
  std::string synth_out;
  auto* cmd_synth = app.add_subcommand("synth", "Write a synthetic benchmark");
  cmd_synth->add_option("--seed", synth_seed, "Generator seed");
  cmd_synth->add_option("--documents", synth_docs, "Number of documents");
  cmd_synth->add_option("--rules", synth_rules, "Number of keyword rules (1-8)");
  cmd_synth->add_option("--twisted-rate", synth_twisted, "Share of negation-heavy documents");
  cmd_synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_refine) return run_refine(refine);
    if (*cmd_plan) return run_plan(plan);
    if (*cmd_repair) return run_repair_rule(repair);
    if (*cmd_eval) return run_eval(eval);
    if (*cmd_vote) return run_vote(vote_method, vote_in, vote_out);
    if (*cmd_synth) return run_synth(synth_seed, synth_docs, synth_rules, synth_twisted, synth_out);
  } catch (const rr::Error& e) {
    std::cerr << "error [" << rr::to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
