#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rulerepair/error.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/ratio.hpp"

namespace rulerepair {

// Denominator of the two accuracy constraints: the non-abstain count of the
// row or column (the integer-program form, default) or all m rules / all n
// datapoints.
enum class AccuracyBase { kVoted, kAll };

struct Thresholds {
  Ratio accuracy{7, 10};       // per-datapoint accuracy
  Ratio evidence{7, 10};       // per-datapoint fraction of non-abstain votes
  Ratio rule_accuracy{7, 10};  // per-rule accuracy
  AccuracyBase base = AccuracyBase::kVoted;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Rule outputs on the labeled seed set plus ground truth and thresholds.
struct RepairInstance {
  LabelMatrix votes;           // L[i][j] = r_j(x_i)
  std::vector<LabelId> truth;  // g(x_i), never abstain
  Thresholds thresholds;
  std::size_t label_count = 0;  // |Y|, abstain included

  std::size_t n() const { return votes.rows(); }
  std::size_t m() const { return votes.cols(); }

  void validate() const {
    if (n() == 0 || m() == 0) fail(ErrorKind::kInvalidArgument, "repair instance needs n >= 1 and m >= 1");
    if (truth.size() != n()) fail(ErrorKind::kShapeMismatch, "truth length differs from row count");
    if (label_count < 2) fail(ErrorKind::kInvalidArgument, "need at least one non-abstain label");
    votes.check_labels(label_count);
    for (const LabelId g : truth) {
      if (g <= kAbstain || static_cast<std::size_t>(g) >= label_count) {
        fail(ErrorKind::kInvalidArgument, "ground truth label " + std::to_string(g) + " invalid");
      }
    }
    for (const Ratio& t : {thresholds.accuracy, thresholds.evidence, thresholds.rule_accuracy}) {
      if (t < Ratio(0) || t > Ratio(1)) fail(ErrorKind::kInvalidArgument, "threshold outside [0, 1]");
    }
  }
};

// Target outputs O[i][j] for the repaired rules on the seed set.
struct RepairPlan {
  LabelMatrix target;
  std::size_t cost = 0;  // cells where target differs from the original votes
  bool optimal = false;
  std::uint64_t nodes = 0;  // search nodes visited, for diagnostics
};

struct ConstraintReport {
  std::vector<bool> evidence_ok;  // per row
  std::vector<bool> accuracy_ok;  // per row
  std::vector<bool> rule_ok;      // per column
  std::size_t recomputed_cost = 0;
  bool cost_matches = true;
  bool feasible = false;
};

enum class SolveMode { kExact, kAnytime };

struct SolveOptions {
  SolveMode mode = SolveMode::kExact;
  std::chrono::milliseconds budget{0};  // anytime only
};

enum class PlanDomain { kReduced, kFull };

// Integer forms of the three constraint families; thresholds are exact ratios.
struct ConstraintCheck {
  Thresholds t;

  bool accuracy(std::int64_t correct, std::int64_t non_abstain, std::int64_t m) const {
    return t.accuracy.den() * correct >= t.accuracy.num() * (t.base == AccuracyBase::kVoted ? non_abstain : m);
  }
  bool evidence(std::int64_t non_abstain, std::int64_t m) const {
    return t.evidence.den() * non_abstain >= t.evidence.num() * m;
  }
  bool rule(std::int64_t correct, std::int64_t non_abstain, std::int64_t n) const {
    return t.rule_accuracy.den() * correct >= t.rule_accuracy.num() * (t.base == AccuracyBase::kVoted ? non_abstain : n);
  }
};

inline ConstraintReport verify_plan(const RepairPlan& plan, const RepairInstance& inst) {
  const LabelMatrix& o = plan.target;
  if (o.rows() != inst.n() || o.cols() != inst.m()) fail(ErrorKind::kShapeMismatch, "plan shape differs from instance");
  const ConstraintCheck check{inst.thresholds};
  ConstraintReport report;
  report.evidence_ok.assign(inst.n(), false);
  report.accuracy_ok.assign(inst.n(), false);
  report.rule_ok.assign(inst.m(), false);
  std::vector<std::int64_t> col_correct(inst.m(), 0), col_voted(inst.m(), 0);
  for (std::size_t i = 0; i < inst.n(); ++i) {
    std::int64_t correct = 0, voted = 0;
    for (std::size_t j = 0; j < inst.m(); ++j) {
      const LabelId v = o.at(i, j);
      if (v != inst.votes.at(i, j)) ++report.recomputed_cost;
      if (v == kAbstain) continue;
      ++voted;
      ++col_voted[j];
      if (v == inst.truth[i]) {
        ++correct;
        ++col_correct[j];
      }
    }
    report.evidence_ok[i] = check.evidence(voted, static_cast<std::int64_t>(inst.m()));
    report.accuracy_ok[i] = check.accuracy(correct, voted, static_cast<std::int64_t>(inst.m()));
  }
  for (std::size_t j = 0; j < inst.m(); ++j) report.rule_ok[j] = check.rule(col_correct[j], col_voted[j], static_cast<std::int64_t>(inst.n()));
  report.cost_matches = report.recomputed_cost == plan.cost;
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  report.feasible = all(report.evidence_ok) && all(report.accuracy_ok) && all(report.rule_ok) && report.cost_matches;
  return report;
}

namespace detail {

// Exact branch-and-bound over the reduced per-cell domain {keep, abstain,
// truth}, visiting cells in row-major order and values in that order, so the
// first optimum found is the lexicographically smallest one.
//
// Lower bound at a node = changes so far + the largest of
//   row bound:    exact min completion cost of the current row (suffix DP over
//                 (non-abstain, correct) counts) + per-row minima of later rows
//   column bound: per rule, fewest remaining cell changes that can lift its
//                 accuracy slack back to >= 0
//   Lagrangian:   rule-accuracy constraints priced by multipliers fixed at the
//                 root by subgradient ascent; the priced problem separates
//                 into rows, each solved by the same suffix DP.
class PlanSearch {
 public:
  PlanSearch(const RepairInstance& inst, const SolveOptions& options)
      : inst_(inst), check_{inst.thresholds}, n_(inst.n()), m_(inst.m()), options_(options) {
    build_cells();
    build_row_tables();
    build_column_tables();
  }

  RepairPlan solve() {
    start_ = std::chrono::steady_clock::now();
    seed_incumbent();
    fit_multipliers();
    assignment_.assign(n_ * m_, 0);
    col_correct_.assign(m_, 0);
    col_voted_.assign(m_, 0);
    exhausted_ = true;
    // Iterative deepening on the cost limit: the first limit admitting a plan
    // is the optimum, and the first plan found under it is the
    // lexicographically smallest optimal one.
    const int root = std::max({rows_after_[0], column_bound(0, 0), static_cast<int>(std::ceil(priced_after_[0] - 1e-6))});
    for (limit_ = std::min(root, best_cost_); limit_ <= best_cost_ && !found_ && !timed_out_; ++limit_) {
      dfs(0, 0, 0, 0, 0);
    }

    RepairPlan plan;
    plan.target = LabelMatrix(n_, m_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) plan.target.at(i, j) = cell(i, j)[best_choice_[i * m_ + j]].value;
    }
    plan.cost = static_cast<std::size_t>(best_cost_);
    plan.optimal = exhausted_;
    plan.nodes = nodes_;
    return plan;
  }

 private:
  static constexpr int kInf = std::numeric_limits<int>::max() / 4;

  struct Option {
    LabelId value;
    int cost;
    int correct;
    int voted;
    int weight;                 // this cell's share of its column's accuracy denominator
    std::int64_t contribution;  // rule-accuracy slack contributed to the column
  };

  const std::vector<Option>& cell(std::size_t i, std::size_t j) const { return cells_[i * m_ + j]; }

  void build_cells() {
    const Ratio& racc = inst_.thresholds.rule_accuracy;
    const bool all = inst_.thresholds.base == AccuracyBase::kAll;
    cells_.resize(n_ * m_);
    for (std::size_t i = 0; i < n_; ++i) {
      const LabelId g = inst_.truth[i];
      for (std::size_t j = 0; j < m_; ++j) {
        const LabelId keep = inst_.votes.at(i, j);
        auto& opts = cells_[i * m_ + j];
        auto add = [&](LabelId value, int cost) {
          const int correct = value == g ? 1 : 0;
          const int voted = value != kAbstain ? 1 : 0;
          const int weight = all ? 1 : voted;
          opts.push_back({value, cost, correct, voted, weight, racc.den() * correct - racc.num() * weight});
        };
        add(keep, 0);
        if (keep != kAbstain) add(kAbstain, 1);
        if (keep != g) add(g, 1);
      }
    }
  }

  std::size_t row_index(std::size_t i, std::size_t p, int voted, int correct) const {
    const std::size_t side = m_ + 1;
    return ((i * side + p) * side + static_cast<std::size_t>(voted)) * side + static_cast<std::size_t>(correct);
  }

  void build_row_tables() {
    const std::size_t side = m_ + 1;
    completion_.assign(n_ * side * side * side, kInf);
    for (std::size_t i = 0; i < n_; ++i) {
      for (int voted = 0; voted <= static_cast<int>(m_); ++voted) {
        for (int correct = 0; correct <= voted; ++correct) {
          const bool ok = check_.accuracy(correct, voted, static_cast<std::int64_t>(m_)) && check_.evidence(voted, static_cast<std::int64_t>(m_));
          completion_[row_index(i, m_, voted, correct)] = ok ? 0 : kInf;
        }
      }
      for (std::size_t p = m_; p-- > 0;) {
        for (int voted = 0; voted <= static_cast<int>(p); ++voted) {
          for (int correct = 0; correct <= voted; ++correct) {
            int best = kInf;
            for (const Option& opt : cell(i, p)) {
              const int rest = completion_[row_index(i, p + 1, voted + opt.voted, correct + opt.correct)];
              if (rest < kInf) best = std::min(best, rest + opt.cost);
            }
            completion_[row_index(i, p, voted, correct)] = best;
          }
        }
      }
    }
    rows_after_.assign(n_ + 1, 0);
    for (std::size_t i = n_; i-- > 0;) {
      const int row_min = completion_[row_index(i, 0, 0, 0)];
      rows_after_[i] = row_min >= kInf || rows_after_[i + 1] >= kInf ? kInf : rows_after_[i + 1] + row_min;
    }
  }

  void build_column_tables() {
    keep_after_.assign((n_ + 1) * m_, 0);
    gain_prefix_.assign((n_ + 1) * m_, {});
    for (std::size_t j = 0; j < m_; ++j) {
      std::vector<std::int64_t> gains;
      gain_prefix_[n_ * m_ + j] = {0};
      for (std::size_t i = n_; i-- > 0;) {
        const auto& opts = cell(i, j);
        std::int64_t best = 0;
        for (std::size_t k = 1; k < opts.size(); ++k) best = std::max(best, opts[k].contribution - opts[0].contribution);
        keep_after_[i * m_ + j] = keep_after_[(i + 1) * m_ + j] + opts[0].contribution;
        if (best > 0) gains.insert(std::upper_bound(gains.begin(), gains.end(), best, std::greater<>()), best);
        auto& prefix = gain_prefix_[i * m_ + j];
        prefix.assign(gains.size() + 1, 0);
        for (std::size_t k = 0; k < gains.size(); ++k) prefix[k + 1] = prefix[k] + gains[k];
      }
    }
  }

  // Fewest changes to fix every rule's accuracy slack; kInf when impossible.
  int column_bound(std::size_t i, std::size_t p) const {
    int total = 0;
    for (std::size_t j = 0; j < m_; ++j) {
      const std::size_t from = j < p ? i + 1 : i;
      const Ratio& racc = inst_.thresholds.rule_accuracy;
      const std::int64_t slack = racc.den() * col_correct_[j] - racc.num() * col_voted_[j];
      const std::int64_t base = slack + keep_after_[from * m_ + j];
      if (base >= 0) continue;
      const auto& prefix = gain_prefix_[from * m_ + j];
      const auto it = std::lower_bound(prefix.begin(), prefix.end(), -base);
      if (it == prefix.end()) return kInf;
      total += static_cast<int>(it - prefix.begin());
    }
    return total;
  }

  // Feasible starting plan: per row the first minimum-cost completion, then
  // rule-accuracy violations patched by switching cells to the truth label
  // (which never breaks a row constraint).
  void seed_incumbent() {
    best_choice_.assign(n_ * m_, 0);
    int cost = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      int voted = 0, correct = 0;
      for (std::size_t p = 0; p < m_; ++p) {
        const int need = completion_[row_index(i, p, voted, correct)];
        const auto& opts = cell(i, p);
        for (std::size_t k = 0; k < opts.size(); ++k) {
          const int rest = completion_[row_index(i, p + 1, voted + opts[k].voted, correct + opts[k].correct)];
          if (rest < kInf && rest + opts[k].cost == need) {
            best_choice_[i * m_ + p] = static_cast<int>(k);
            voted += opts[k].voted;
            correct += opts[k].correct;
            cost += opts[k].cost;
            break;
          }
        }
      }
    }
    for (std::size_t j = 0; j < m_; ++j) {
      std::int64_t slack = 0;
      for (std::size_t i = 0; i < n_; ++i) slack += cell(i, j)[best_choice_[i * m_ + j]].contribution;
      for (std::size_t i = 0; i < n_ && slack < 0; ++i) {
        const auto& opts = cell(i, j);
        int& choice = best_choice_[i * m_ + j];
        if (opts[choice].value == inst_.truth[i]) continue;
        const int to_truth = static_cast<int>(opts.size()) - 1;  // truth is always last when it differs
        slack += opts[to_truth].contribution - opts[choice].contribution;
        cost += opts[to_truth].cost - opts[choice].cost;
        choice = to_truth;
      }
    }
    best_cost_ = cost;
  }

  // Priced completion tables for multipliers `lambda`: priced_[row_index(i, p,
  // v, c)] = min over row-feasible completions of sum(cost - lambda_j * a_j).
  void build_priced_tables(const std::vector<double>& lambda, std::vector<double>& table,
                           std::vector<double>& after) const {
    const double inf = std::numeric_limits<double>::infinity();
    table.assign(completion_.size(), inf);
    for (std::size_t i = 0; i < n_; ++i) {
      for (int voted = 0; voted <= static_cast<int>(m_); ++voted) {
        for (int correct = 0; correct <= voted; ++correct) {
          if (completion_[row_index(i, m_, voted, correct)] == 0) table[row_index(i, m_, voted, correct)] = 0;
        }
      }
      for (std::size_t p = m_; p-- > 0;) {
        for (int voted = 0; voted <= static_cast<int>(p); ++voted) {
          for (int correct = 0; correct <= voted; ++correct) {
            double best = inf;
            for (const Option& opt : cell(i, p)) {
              const double rest = table[row_index(i, p + 1, voted + opt.voted, correct + opt.correct)];
              best = std::min(best, rest + opt.cost - lambda[p] * static_cast<double>(opt.contribution));
            }
            table[row_index(i, p, voted, correct)] = best;
          }
        }
      }
    }
    after.assign(n_ + 1, 0.0);
    for (std::size_t i = n_; i-- > 0;) after[i] = after[i + 1] + table[row_index(i, 0, 0, 0)];
  }

  // Subgradient ascent on the Lagrangian dual of the rule-accuracy
  // constraints, with Polyak steps towards the incumbent cost.
  void fit_multipliers() {
    lambda_.assign(m_, 0.0);
    build_priced_tables(lambda_, priced_, priced_after_);
    double best_value = priced_after_[0];
    std::vector<double> best_lambda = lambda_;
    std::vector<double> lambda = lambda_;
    std::vector<double> table, after;
    double scale = 2.0;
    int stale = 0;
    for (int iter = 0; iter < 300 && best_value < best_cost_ - 1e-9; ++iter) {
      build_priced_tables(lambda, table, after);
      const double value = after[0];
      if (value > best_value + 1e-12) {
        best_value = value;
        best_lambda = lambda;
        stale = 0;
      } else if (++stale >= 10) {
        scale /= 2;
        stale = 0;
        if (scale < 1e-4) break;
      }
      // Column sums of the priced argmin plan give the subgradient.
      std::vector<double> slack(m_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        int voted = 0, correct = 0;
        for (std::size_t p = 0; p < m_; ++p) {
          const double need = table[row_index(i, p, voted, correct)];
          for (const Option& opt : cell(i, p)) {
            const double rest = table[row_index(i, p + 1, voted + opt.voted, correct + opt.correct)];
            if (std::fabs(rest + opt.cost - lambda[p] * static_cast<double>(opt.contribution) - need) <= 1e-9) {
              slack[p] += static_cast<double>(opt.contribution);
              voted += opt.voted;
              correct += opt.correct;
              break;
            }
          }
        }
      }
      double norm = 0;
      for (std::size_t j = 0; j < m_; ++j) {
        const double g = lambda[j] > 0 || slack[j] < 0 ? -slack[j] : 0.0;
        norm += g * g;
      }
      if (norm == 0) break;
      const double step = scale * (static_cast<double>(best_cost_) - value) / norm;
      for (std::size_t j = 0; j < m_; ++j) lambda[j] = std::max(0.0, lambda[j] - step * slack[j]);
    }
    lambda_ = best_lambda;
    build_priced_tables(lambda_, priced_, priced_after_);
  }

  bool out_of_time() {
    if (options_.mode != SolveMode::kAnytime) return false;
    if ((nodes_ & 1023u) != 0) return timed_out_;
    timed_out_ = std::chrono::steady_clock::now() - start_ >= options_.budget;
    return timed_out_;
  }

  // The rows from `i` on only see the rule-accuracy slacks left by earlier
  // rows, so a (row, slacks) state that failed with some remaining budget
  // fails again with any smaller budget.
  struct StateHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const {
      std::size_t h = 1469598103934665603ull;
      for (const std::int64_t v : key) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
      return h;
    }
  };

  void next_row(std::size_t i, int cost) {
    if (i == n_) {
      dfs(i, 0, 0, 0, cost);
      return;
    }
    const Ratio& racc = inst_.thresholds.rule_accuracy;
    std::vector<std::int64_t> key(m_ + 1);
    key[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 0; j < m_; ++j) key[j + 1] = racc.den() * col_correct_[j] - racc.num() * col_voted_[j];
    const int budget = limit_ - cost;
    const auto it = failed_.find(key);
    if (it != failed_.end() && it->second >= budget) return;
    dfs(i, 0, 0, 0, cost);
    if (found_ || timed_out_) return;
    if (it != failed_.end()) {
      it->second = budget;
    } else if (failed_.size() < kMemoLimit) {
      failed_.emplace(std::move(key), budget);
    }
  }

  void dfs(std::size_t i, std::size_t p, int voted, int correct, int cost) {
    ++nodes_;
    if (out_of_time()) {
      exhausted_ = false;
      return;
    }
    if (p == m_) {
      if (completion_[row_index(i, m_, voted, correct)] != 0) return;
      next_row(i + 1, cost);
      return;
    }
    if (i == n_) {
      if (column_bound(n_, 0) != 0) return;
      best_cost_ = cost;
      best_choice_ = assignment_;
      found_ = true;
      return;
    }
    const int row_rest = completion_[row_index(i, p, voted, correct)];
    if (row_rest >= kInf || rows_after_[i + 1] >= kInf) return;
    const int col = column_bound(i, p);
    if (col >= kInf) return;
    const double priced = cost - priced_assigned_ + priced_[row_index(i, p, voted, correct)] + priced_after_[i + 1];
    const int bound = std::max(cost + std::max(row_rest + rows_after_[i + 1], col),
                               static_cast<int>(std::ceil(priced - 1e-6)));
    if (bound > limit_) return;

    const auto& opts = cell(i, p);
    for (std::size_t k = 0; k < opts.size(); ++k) {
      const Option& opt = opts[k];
      assignment_[i * m_ + p] = static_cast<int>(k);
      col_correct_[p] += opt.correct;
      col_voted_[p] += opt.weight;
      priced_assigned_ += lambda_[p] * static_cast<double>(opt.contribution);
      dfs(i, p + 1, voted + opt.voted, correct + opt.correct, cost + opt.cost);
      col_correct_[p] -= opt.correct;
      col_voted_[p] -= opt.weight;
      priced_assigned_ -= lambda_[p] * static_cast<double>(opt.contribution);
      if (timed_out_ || found_) return;
    }
  }

  const RepairInstance& inst_;
  ConstraintCheck check_;
  std::size_t n_;
  std::size_t m_;
  SolveOptions options_;

  std::vector<std::vector<Option>> cells_;
  std::vector<int> completion_;
  std::vector<int> rows_after_;
  std::vector<std::int64_t> keep_after_;
  std::vector<std::vector<std::int64_t>> gain_prefix_;

  std::vector<int> assignment_;
  std::vector<std::int64_t> col_correct_;
  std::vector<std::int64_t> col_voted_;
  std::vector<int> best_choice_;
  std::vector<double> lambda_;
  std::vector<double> priced_;
  std::vector<double> priced_after_;
  double priced_assigned_ = 0;
  int best_cost_ = kInf;
  static constexpr std::size_t kMemoLimit = 4'000'000;
  std::unordered_map<std::vector<std::int64_t>, int, StateHash> failed_;
  int limit_ = 0;
  bool found_ = false;
  bool exhausted_ = true;
  bool timed_out_ = false;
  std::uint64_t nodes_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Minimum-change target matrix satisfying all three constraint families. A
// plan always exists (every cell set to the truth label is feasible). In
// anytime mode the best plan found within the budget is returned with
// optimal = false when the search did not finish.
inline RepairPlan plan_repair(const RepairInstance& inst, const SolveOptions& options = {}) {
  inst.validate();
  return detail::PlanSearch(inst, options).solve();
}

// Exhaustive optimality oracle. Enumerates every assignment (rows first
// filtered by the row constraints, then all row combinations) over either the
// reduced domain {keep, abstain, truth} or the full label range, and returns
// the first minimum-cost feasible one in lexicographic order.
inline RepairPlan brute_force_plan(const RepairInstance& inst, PlanDomain domain = PlanDomain::kReduced) {
  inst.validate();
  const std::size_t n = inst.n();
  const std::size_t m = inst.m();
  const std::size_t limit = domain == PlanDomain::kFull ? 12 : 20;
  if (n * m > limit) {
    fail(ErrorKind::kSizeGuard, "brute force limited to n*m <= " + std::to_string(limit) + ", got " + std::to_string(n * m));
  }

  struct RowChoice {
    std::vector<LabelId> values;
    int cost = 0;
  };
  const ConstraintCheck check{inst.thresholds};

  std::vector<std::vector<RowChoice>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabelId g = inst.truth[i];
    std::vector<std::vector<LabelId>> domains(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (domain == PlanDomain::kFull) {
        for (std::size_t y = 0; y < inst.label_count; ++y) domains[j].push_back(static_cast<LabelId>(y));
      } else {
        for (const LabelId v : {inst.votes.at(i, j), kAbstain, g}) {
          if (std::find(domains[j].begin(), domains[j].end(), v) == domains[j].end()) domains[j].push_back(v);
        }
      }
    }
    std::vector<std::size_t> odometer(m, 0);
    while (true) {
      RowChoice choice;
      std::int64_t voted = 0, correct = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const LabelId v = domains[j][odometer[j]];
        choice.values.push_back(v);
        if (v != inst.votes.at(i, j)) ++choice.cost;
        if (v != kAbstain) ++voted;
        if (v == g) ++correct;
      }
      const auto width = static_cast<std::int64_t>(m);
      if (check.accuracy(correct, voted, width) && check.evidence(voted, width)) rows[i].push_back(std::move(choice));
      std::size_t pos = m;
      bool done = true;
      while (pos > 0) {
        --pos;
        if (++odometer[pos] < domains[pos].size()) {
          done = false;
          break;
        }
        odometer[pos] = 0;
      }
      if (done) break;
    }
  }

  RepairPlan best;
  best.target = LabelMatrix(n, m);
  int best_cost = std::numeric_limits<int>::max();
  std::vector<std::size_t> pick(n, 0);
  std::uint64_t visited = 0;
  // Odometer over row choices, most significant row first.
  if (std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.empty(); })) {
    fail(ErrorKind::kInvalidArgument, "no row-feasible assignment; thresholds malformed");
  }
  while (true) {
    ++visited;
    int cost = 0;
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      std::int64_t voted = 0, correct = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const LabelId v = rows[i][pick[i]].values[j];
        if (v != kAbstain) ++voted;
        if (v == inst.truth[i]) ++correct;
      }
      ok = check.rule(correct, voted, static_cast<std::int64_t>(n));
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) cost += rows[i][pick[i]].cost;
      if (cost < best_cost) {
        best_cost = cost;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) best.target.at(i, j) = rows[i][pick[i]].values[j];
        }
      }
    }
    std::size_t pos = n;
    bool done = true;
    while (pos > 0) {
      --pos;
      if (++pick[pos] < rows[pos].size()) {
        done = false;
        break;
      }
      pick[pos] = 0;
    }
    if (done) break;
  }
  best.cost = static_cast<std::size_t>(best_cost);
  best.optimal = true;
  best.nodes = visited;
  return best;
}

// Writes the integer program in CPLEX LP format. Per cell (i, j) it declares
// o_i_j (integer in [0, |Y|-1]) and binaries m_i_j, c_i_j, e_i_j, linked with
// Big-M constraints (M = |Y|):
//   o - M m <= L,  o + M m >= L            m = 0 forces o = L
//   o + M c <= g + M,  o - M c >= g - M    c = 1 forces o = g
//   o - M e <= 0,  o - e >= 0              e = 1 iff o > 0
// followed by one accuracy and one evidence constraint per datapoint and one
// accuracy constraint per rule, all scaled to integer coefficients. That is
// 6nm + 2n + m constraints over 4nm variables.
inline std::string export_program(const RepairInstance& inst) {
  inst.validate();
  const std::size_t n = inst.n();
  const std::size_t m = inst.m();
  const auto big_m = static_cast<std::int64_t>(inst.label_count);
  const auto& t = inst.thresholds;
  auto var = [](char kind, std::size_t i, std::size_t j) {
    return std::string(1, kind) + "_" + std::to_string(i) + "_" + std::to_string(j);
  };
  std::ostringstream out;
  out << "\\ rule repair program: n=" << n << " m=" << m << " labels=" << inst.label_count << "\n";
  out << "Minimize\n obj:";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out << ((i | j) == 0 ? " " : " + ") << var('m', i, j);
  }
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t g = inst.truth[i];
    for (std::size_t j = 0; j < m; ++j) {
      const std::int64_t l = inst.votes.at(i, j);
      const std::string suffix = std::to_string(i) + "_" + std::to_string(j);
      const std::string o = var('o', i, j);
      out << " mu_" << suffix << ": " << o << " - " << big_m << " " << var('m', i, j) << " <= " << l << "\n";
      out << " ml_" << suffix << ": " << o << " + " << big_m << " " << var('m', i, j) << " >= " << l << "\n";
      out << " cu_" << suffix << ": " << o << " + " << big_m << " " << var('c', i, j) << " <= " << g + big_m << "\n";
      out << " cl_" << suffix << ": " << o << " - " << big_m << " " << var('c', i, j) << " >= " << g - big_m << "\n";
      out << " eu_" << suffix << ": " << o << " - " << big_m << " " << var('e', i, j) << " <= 0\n";
      out << " el_" << suffix << ": " << o << " - " << var('e', i, j) << " >= 0\n";
    }
  }
  const bool voted_base = t.base == AccuracyBase::kVoted;
  // den * sum(c) - num * sum(e) >= 0, or den * sum(c) >= num * |cells| when
  // the denominator is the full row or column.
  auto accuracy_row = [&](const std::vector<std::pair<std::size_t, std::size_t>>& cells, const Ratio& theta) {
    std::string s;
    for (const auto& [i, j] : cells) {
      s += (s.empty() ? "" : " + ") + std::to_string(theta.den()) + " " + var('c', i, j);
      if (voted_base) s += " - " + std::to_string(theta.num()) + " " + var('e', i, j);
    }
    const std::int64_t rhs = voted_base ? 0 : theta.num() * static_cast<std::int64_t>(cells.size());
    return s + " >= " + std::to_string(rhs);
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t j = 0; j < m; ++j) cells.emplace_back(i, j);
    out << " acc_" << i << ": " << accuracy_row(cells, t.accuracy) << "\n";
    out << " evid_" << i << ":";
    for (std::size_t j = 0; j < m; ++j) out << (j == 0 ? " " : " + ") << t.evidence.den() << " " << var('e', i, j);
    out << " >= " << t.evidence.num() * static_cast<std::int64_t>(m) << "\n";
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < n; ++i) cells.emplace_back(i, j);
    out << " racc_" << j << ": " << accuracy_row(cells, t.rule_accuracy) << "\n";
  }
  out << "Bounds\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out << " 0 <= " << var('o', i, j) << " <= " << inst.label_count - 1 << "\n";
  }
  out << "General\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out << " " << var('o', i, j) << "\n";
  }
  out << "Binary\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out << " " << var('m', i, j) << " " << var('c', i, j) << " " << var('e', i, j) << "\n";
    }
  }
  out << "End\n";
  return out.str();
}

}  // namespace rulerepair
