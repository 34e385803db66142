#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <string_view>
#include <span>
#include <string>
#include <vector>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/io.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/label_models.hpp"
#include "rulerepair/metrics.hpp"
#include "rulerepair/path_repair.hpp"
#include "rulerepair/planner.hpp"

namespace rulerepair {

struct PipelineConfig {
  std::filesystem::path rules_path;
  std::filesystem::path data_path;
  std::filesystem::path out_dir;
  Thresholds thresholds;  // 0.7 each
  std::size_t seed_size = 40;
  PathAlgorithm path_algorithm = PathAlgorithm::kEntropy;
  LabelModelSpec model;
  std::uint64_t seed = 0;
  SolveOptions solver;
  // When set, every labeled datapoint is used as X*, in dataset order.
  bool use_all_labeled = false;
};

// "exact" or "anytime:<seconds>".
inline SolveOptions parse_solver(std::string_view text) {
  if (text == "exact") return {};
  constexpr std::string_view prefix = "anytime:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string secs(text.substr(prefix.size()));
    try {
      std::size_t used = 0;
      const double s = std::stod(secs, &used);
      if (used == secs.size() && s >= 0) {
        return {SolveMode::kAnytime, std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000.0))};
      }
    } catch (const std::exception&) {
    }
  }
  fail(ErrorKind::kInvalidArgument, "solver must be 'exact' or 'anytime:<seconds>', got '" + std::string(text) + "'");
}

inline std::string solver_text(const SolveOptions& options) {
  if (options.mode == SolveMode::kExact) return "exact";
  std::ostringstream out;
  out << "anytime:" << static_cast<double>(options.budget.count()) / 1000.0;
  return out.str();
}

// r_j(x_i) for every datapoint and rule.
inline LabelMatrix apply_rules(const std::vector<RuleTree>& rules, std::span<const Datapoint> xs,
                               const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  LabelMatrix out(xs.size(), rules.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < rules.size(); ++j) out.at(i, j) = evaluate(rules[j], xs[i], registry);
  }
  return out;
}

struct SeedSample {
  std::vector<std::size_t> indices;  // into the dataset, ascending
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Fisher-Yates with a fixed bounded draw, so samples do not depend on the
// standard library's distribution implementations.
inline void seeded_shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t k = v.size(); k > 1; --k) {
    const std::size_t pick = static_cast<std::size_t>(rng() % k);
    std::swap(v[k - 1], v[pick]);
  }
}

}  // namespace detail

// Draws ceil(size/2) datapoints the model currently gets right and
// floor(size/2) it gets wrong, from the labeled datapoints only. A short
// stratum is topped up from the other one with a warning.
inline SeedSample sample_seed_set(const std::vector<Datapoint>& xs, std::span<const LabelId> before,
                                  std::size_t size, std::uint64_t seed) {
  if (before.size() != xs.size()) fail(ErrorKind::kShapeMismatch, "one prediction per datapoint required");
  if (size < 2) fail(ErrorKind::kInvalidArgument, "seed set size must be at least 2, got " + std::to_string(size));
  std::vector<std::size_t> right, wrong;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].truth()) continue;
    (before[i] == *xs[i].truth() ? right : wrong).push_back(i);
  }
  if (right.empty() && wrong.empty()) fail(ErrorKind::kInvalidArgument, "no labeled datapoints to sample from");
  if (right.size() + wrong.size() < size) {
    fail(ErrorKind::kInvalidArgument, "seed set size " + std::to_string(size) + " exceeds the " +
                                          std::to_string(right.size() + wrong.size()) + " labeled datapoints");
  }
  std::mt19937_64 rng(seed);
  detail::seeded_shuffle(right, rng);
  detail::seeded_shuffle(wrong, rng);

  SeedSample sample;
  std::size_t want_right = (size + 1) / 2;
  std::size_t want_wrong = size / 2;
  if (wrong.size() < want_wrong) {
    sample.warnings.push_back("only " + std::to_string(wrong.size()) + " wrongly predicted datapoints; using more correct ones");
    want_right += want_wrong - wrong.size();
    want_wrong = wrong.size();
  } else if (right.size() < want_right) {
    sample.warnings.push_back("only " + std::to_string(right.size()) + " correctly predicted datapoints; using more wrong ones");
    want_wrong += want_right - right.size();
    want_right = right.size();
  }
  sample.indices.assign(right.begin(), right.begin() + static_cast<std::ptrdiff_t>(want_right));
  sample.indices.insert(sample.indices.end(), wrong.begin(), wrong.begin() + static_cast<std::ptrdiff_t>(want_wrong));
  std::sort(sample.indices.begin(), sample.indices.end());
  sample.correct = want_right;
  sample.wrong = want_wrong;
  return sample;
}

struct RuleReport {
  std::string name;
  Ratio accuracy_before;  // correct / non-abstain over labeled datapoints
  Ratio accuracy_after;
  Ratio coverage_before;  // non-abstain / labeled datapoints
  Ratio coverage_after;
  std::size_t rcost = 0;
  std::size_t changed_cells = 0;  // on the seed set
};

struct MetricReport {
  std::size_t datapoints = 0;
  std::size_t labeled = 0;
  std::vector<std::string> seed_ids;
  PredictionDeltas deltas;
  std::size_t cost = 0;  // changed rule outputs on the seed set
  bool plan_optimal = false;
  bool plan_reproduced = false;  // refined rules return exactly the planned outputs on the seed set
  bool feasible = false;         // refined outputs satisfy every threshold on the seed set
  std::size_t rcost = 0;
  std::vector<RuleReport> rules;
  std::vector<std::string> warnings;
};

struct PipelineResult {
  RuleSet refined;
  std::vector<RefinementSequence> sequences;
  RepairPlan plan;
  std::vector<LabelId> before;
  std::vector<LabelId> after;
  MetricReport report;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  }
}

inline std::vector<LabelId> truth_of(std::span<const Datapoint> xs, std::span<const std::size_t> rows) {
  std::vector<LabelId> out;
  for (const std::size_t i : rows) out.push_back(*xs[i].truth());
  return out;
}

}  // namespace detail

// In-memory pipeline: rules over the dataset, label model, seed sample,
// plan, per-rule refinement, rules again, label model again, metrics.
inline PipelineResult run_repair(const RuleSet& rules, const std::vector<Datapoint>& xs, const PipelineConfig& config) {
  const auto registry = registry_for(rules);
  const auto trees = rules.trees();
  const LabelSet& labels = rules.labels;
  const auto exchange = config.out_dir.empty() ? std::filesystem::path{} : config.out_dir / "exchange";
  PipelineResult result;
  MetricReport& report = result.report;
  report.datapoints = xs.size();

  const LabelMatrix votes_before = detail::stage("apply-rules", [&] { return apply_rules(trees, xs, *registry); });
  result.before = detail::stage("label-model", [&] { return predict(config.model, votes_before, labels, exchange); });

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].truth()) labeled.push_back(i);
  }
  report.labeled = labeled.size();

  const std::vector<std::size_t> seed = detail::stage("sample", [&] {
    if (config.use_all_labeled) {
      if (labeled.empty()) fail(ErrorKind::kInvalidArgument, "no labeled datapoints");
      return labeled;
    }
    SeedSample s = sample_seed_set(xs, result.before, config.seed_size, config.seed);
    report.warnings.insert(report.warnings.end(), s.warnings.begin(), s.warnings.end());
    return s.indices;
  });
  std::vector<Datapoint> seed_points;
  for (const std::size_t i : seed) {
    seed_points.push_back(xs[i]);
    report.seed_ids.push_back(xs[i].id());
  }

  RepairInstance instance;
  instance.votes = votes_before.select_rows(seed);
  instance.truth = detail::truth_of(xs, seed);
  instance.thresholds = config.thresholds;
  instance.label_count = labels.size();
  result.plan = detail::stage("plan", [&] { return plan_repair(instance, config.solver); });

  const RepairedRules repaired = detail::stage(
      "refine", [&] { return apply_repair_plan(trees, result.plan, seed_points, config.path_algorithm, *registry); });
  result.sequences = repaired.sequences;
  result.refined.labels = labels;
  for (std::size_t j = 0; j < trees.size(); ++j) result.refined.rules.push_back({rules.rules[j].name, repaired.rules[j]});

  const LabelMatrix votes_after = detail::stage("apply-refined", [&] { return apply_rules(repaired.rules, xs, *registry); });
  result.after = detail::stage("label-model-after", [&] { return predict(config.model, votes_after, labels, exchange); });

  const LabelMatrix seed_after = votes_after.select_rows(seed);
  report.cost = repair_cost(instance.votes, seed_after);
  report.plan_optimal = result.plan.optimal;
  report.plan_reproduced = seed_after == result.plan.target;
  RepairPlan realised{seed_after, report.cost, result.plan.optimal, 0};
  report.feasible = verify_plan(realised, instance).feasible;

  const std::vector<LabelId> truth = detail::truth_of(xs, labeled);
  std::vector<LabelId> before_l, after_l;
  for (const std::size_t i : labeled) {
    before_l.push_back(result.before[i]);
    after_l.push_back(result.after[i]);
  }
  report.deltas = prediction_deltas(before_l, after_l, truth);

  const LabelMatrix lb = votes_before.select_rows(labeled);
  const LabelMatrix la = votes_after.select_rows(labeled);
  for (std::size_t j = 0; j < trees.size(); ++j) {
    RuleReport r;
    r.name = rules.rules[j].name;
    if (!labeled.empty()) {
      r.accuracy_before = rule_accuracy(lb.column(j), truth, Denominator::kNonAbstain);
      r.accuracy_after = rule_accuracy(la.column(j), truth, Denominator::kNonAbstain);
      auto coverage = [&](const std::vector<LabelId>& col) {
        return Ratio(static_cast<std::int64_t>(std::count_if(col.begin(), col.end(), [](LabelId v) { return v != kAbstain; })),
                     static_cast<std::int64_t>(col.size()));
      };
      r.coverage_before = coverage(lb.column(j));
      r.coverage_after = coverage(la.column(j));
    }
    r.rcost = result.sequences[j].rcost();
    for (std::size_t i = 0; i < seed.size(); ++i) r.changed_cells += instance.votes.at(i, j) != seed_after.at(i, j) ? 1 : 0;
    report.rcost += r.rcost;
    report.rules.push_back(std::move(r));
  }
  return result;
}

inline Json report_to_json(const MetricReport& r, const PipelineConfig& config) {
  Json j;
  j["global_before"] = r.deltas.global_before.to_double();
  j["global_after"] = r.deltas.global_after.to_double();
  j["fix_pct"] = r.deltas.fix_pct.to_double();
  j["preserve_pct"] = r.deltas.preserve_pct.to_double();
  j["cost"] = r.cost;
  j["rcost"] = r.rcost;
  j["plan_optimal"] = r.plan_optimal;
  j["plan_reproduced"] = r.plan_reproduced;
  j["feasible"] = r.feasible;
  j["fixed"] = r.deltas.fixed;
  j["broken"] = r.deltas.broken;
  j["datapoints"] = r.datapoints;
  j["labeled"] = r.labeled;
  Json cfg;
  cfg["thresholds"] = thresholds_to_json(config.thresholds);
  cfg["seed_size"] = config.use_all_labeled ? r.seed_ids.size() : config.seed_size;
  cfg["path_algo"] = std::string(to_string(config.path_algorithm));
  cfg["model"] = config.model.str();
  cfg["seed"] = config.seed;
  cfg["solver"] = solver_text(config.solver);
  j["config"] = std::move(cfg);
  j["seed_set"] = r.seed_ids;
  Json rules = Json::array();
  for (const auto& rule : r.rules) {
    Json e;
    e["name"] = rule.name;
    e["accuracy_before"] = rule.accuracy_before.to_double();
    e["accuracy_after"] = rule.accuracy_after.to_double();
    e["coverage_before"] = rule.coverage_before.to_double();
    e["coverage_after"] = rule.coverage_after.to_double();
    e["rcost"] = rule.rcost;
    e["changed_cells"] = rule.changed_cells;
    rules.push_back(std::move(e));
  }
  j["rules"] = std::move(rules);
  j["warnings"] = r.warnings;
  return j;
}

inline std::string rule_accuracy_csv(const MetricReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "rule,accuracy_before,accuracy_after,coverage_before,coverage_after,rcost,changed_cells\n";
  for (const auto& rule : r.rules) {
    out << rule.name << ',' << rule.accuracy_before.to_double() << ',' << rule.accuracy_after.to_double() << ','
        << rule.coverage_before.to_double() << ',' << rule.coverage_after.to_double() << ',' << rule.rcost << ','
        << rule.changed_cells << "\n";
  }
  return out.str();
}

inline std::string audit_json(const PipelineResult& result) {
  Json rules = Json::array();
  for (std::size_t j = 0; j < result.refined.rules.size(); ++j) {
    Json e;
    e["name"] = result.refined.rules[j].name;
    e["rcost"] = result.sequences[j].rcost();
    e["steps"] = sequence_to_json(result.sequences[j], result.refined.labels);
    rules.push_back(std::move(e));
  }
  Json doc;
  doc["seed_set"] = result.report.seed_ids;  // plan rows, in order
  doc["plan"] = plan_to_json(result.plan);
  doc["rules"] = std::move(rules);
  return doc.dump(2) + "\n";
}

// Writes report.json, rule_accuracy.csv, refined_rules.json and audit.json.
inline void emit_report(const PipelineResult& result, const PipelineConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report_to_json(result.report, config).dump(2) + "\n");
  write_file(dir / "rule_accuracy.csv", rule_accuracy_csv(result.report));
  write_file(dir / "refined_rules.json", serialize_rule_set(result.refined));
  write_file(dir / "audit.json", audit_json(result));
}

inline PipelineResult run_repair_pipeline(const PipelineConfig& config) {
  const RuleSet rules = detail::stage("load-rules", [&] { return parse_rule_set(read_file(config.rules_path)); });
  const auto xs = detail::stage("load-data", [&] { return load_dataset(config.data_path, rules.labels); });
  PipelineResult result = run_repair(rules, xs, config);
  if (!config.out_dir.empty()) detail::stage("emit", [&] { emit_report(result, config, config.out_dir); return 0; });
  return result;
}

}  // namespace rulerepair
