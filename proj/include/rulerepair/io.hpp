#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/planner.hpp"
#include "rulerepair/predicate.hpp"
#include "rulerepair/rule_tree.hpp"
#include "rulerepair/translate.hpp"

namespace rulerepair {

// Key order in emitted documents follows insertion order, so output bytes are
// a function of the content alone.
using Json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, what + ": " + e.what());
  }
}

namespace detail {

inline const Json& member(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorKind::kParse, where + ": missing \"" + key + "\"");
  return obj.at(key);
}

inline std::string string_member(const Json& obj, const char* key, const std::string& where) {
  const Json& v = member(obj, key, where);
  if (!v.is_string()) fail(ErrorKind::kParse, where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline LabelId label_member(const Json& obj, const char* key, const LabelSet& labels, const std::string& where) {
  const std::string name = string_member(obj, key, where);
  const auto id = labels.find(name);
  if (!id) fail(ErrorKind::kParse, where + ": unknown label '" + name + "'");
  return *id;
}

}  // namespace detail

// ---- predicates, trees, expressions -------------------------------------

inline Json predicate_to_json(const Predicate& p, const LabelSet& labels) {
  Json j;
  j["kind"] = std::string(to_string(p.kind));
  switch (p.kind) {
    case PredicateKind::kContainsWord:
      j["word"] = p.key;
      break;
    case PredicateKind::kAttrEquals:
      j["attr"] = p.key;
      j["value"] = p.value;
      break;
    case PredicateKind::kOpaqueEquals:
      j["opaque"] = p.key;
      j["label"] = labels.name(p.label);
      break;
  }
  return j;
}

inline Predicate predicate_from_json(const Json& j, const LabelSet& labels, const std::string& where) {
  const std::string kind = detail::string_member(j, "kind", where);
  if (kind == "contains-word") {
    const auto word = detail::string_member(j, "word", where);
    const auto tokens = tokenize(word);
    if (tokens.size() != 1 || tokens.front() != word) {
      fail(ErrorKind::kParse, where + ": word '" + word + "' is not a single lowercase token");
    }
    return contains_word(word);
  }
  if (kind == "attr-equals") {
    return attr_equals(detail::string_member(j, "attr", where), detail::string_member(j, "value", where));
  }
  if (kind == "opaque-equals") {
    return opaque_equals(detail::string_member(j, "opaque", where), detail::label_member(j, "label", labels, where));
  }
  fail(ErrorKind::kParse, where + ": unknown predicate kind '" + kind + "'");
}

inline Json rule_to_json(const RuleTree& rule, const LabelSet& labels) {
  Json j;
  if (rule.is_leaf()) {
    j["label"] = labels.name(rule.label());
    return j;
  }
  j["pred"] = predicate_to_json(rule.predicate(), labels);
  j["false"] = rule_to_json(rule.on_false(), labels);
  j["true"] = rule_to_json(rule.on_true(), labels);
  return j;
}

inline RuleTree rule_from_json(const Json& j, const LabelSet& labels, const std::string& where) {
  if (j.is_object() && j.contains("label")) return RuleTree::leaf(detail::label_member(j, "label", labels, where));
  const Predicate p = predicate_from_json(detail::member(j, "pred", where), labels, where);
  return RuleTree::inner(p, rule_from_json(detail::member(j, "false", where), labels, where + ".false"),
                         rule_from_json(detail::member(j, "true", where), labels, where + ".true"));
}

inline Condition condition_from_json(const Json& j, const LabelSet& labels, const std::string& where) {
  for (const char* key : {"or", "and"}) {
    if (!j.is_object() || !j.contains(key)) continue;
    const Json& ops = j.at(key);
    if (!ops.is_array() || ops.empty()) fail(ErrorKind::kParse, where + ": \"" + key + "\" needs a non-empty list");
    std::vector<Condition> operands;
    for (std::size_t k = 0; k < ops.size(); ++k) {
      operands.push_back(condition_from_json(ops[k], labels, where + "." + key + "[" + std::to_string(k) + "]"));
    }
    return std::string(key) == "or" ? Condition::any_of(std::move(operands)) : Condition::all_of(std::move(operands));
  }
  return Condition::of(predicate_from_json(j, labels, where));
}

inline Json condition_to_json(const Condition& c, const LabelSet& labels) {
  if (c.kind == Condition::Kind::kAtom) return predicate_to_json(c.atom, labels);
  Json ops = Json::array();
  for (const auto& op : c.operands) ops.push_back(condition_to_json(op, labels));
  Json j;
  j[c.kind == Condition::Kind::kAny ? "or" : "and"] = std::move(ops);
  return j;
}

inline LfExpr lf_from_json(const Json& j, const LabelSet& labels, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::kParse, where + ": expression must be an object");
  if (j.contains("return")) return LfExpr::returns(detail::label_member(j, "return", labels, where));
  if (j.contains("opaque")) return LfExpr::opaque(detail::string_member(j, "opaque", where));
  if (j.contains("if")) {
    return LfExpr::if_then_else(condition_from_json(j.at("if"), labels, where + ".if"),
                                lf_from_json(detail::member(j, "then", where), labels, where + ".then"),
                                lf_from_json(detail::member(j, "else", where), labels, where + ".else"));
  }
  fail(ErrorKind::kParse, where + ": expected \"if\", \"return\" or \"opaque\"");
}

inline Json lf_to_json(const LfExpr& e, const LabelSet& labels) {
  Json j;
  switch (e.kind) {
    case LfExpr::Kind::kReturn:
      j["return"] = labels.name(e.label);
      break;
    case LfExpr::Kind::kOpaque:
      j["opaque"] = e.labeler;
      break;
    case LfExpr::Kind::kIf:
      j["if"] = condition_to_json(e.condition, labels);
      j["then"] = lf_to_json(e.branches.at(0), labels);
      j["else"] = lf_to_json(e.branches.at(1), labels);
      break;
  }
  return j;
}

// ---- rule sets ---------------------------------------------------------

struct NamedRule {
  std::string name;
  RuleTree tree;
};

struct RuleSet {
  LabelSet labels;
  std::vector<NamedRule> rules;

  std::vector<RuleTree> trees() const {
    std::vector<RuleTree> out;
    for (const auto& r : rules) out.push_back(r.tree);
    return out;
  }
};

// {"labels": [abstain first, ...], "rules": [{"name", "tree" | "lf"}, ...]}.
// DSL rules are translated to trees on load.
inline RuleSet parse_rule_set(const std::string& text) {
  const Json doc = parse_json(text, "rule file");
  const Json& names = detail::member(doc, "labels", "rule file");
  if (!names.is_array()) fail(ErrorKind::kParse, "rule file: \"labels\" must be a list");
  std::vector<std::string> vocabulary;
  for (const auto& n : names) {
    if (!n.is_string()) fail(ErrorKind::kParse, "rule file: label names must be strings");
    vocabulary.push_back(n.get<std::string>());
  }
  RuleSet set{LabelSet(vocabulary), {}};
  const Json& rules = detail::member(doc, "rules", "rule file");
  if (!rules.is_array()) fail(ErrorKind::kParse, "rule file: \"rules\" must be a list");
  std::set<std::string> seen;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const std::string where = "rules[" + std::to_string(k) + "]";
    const std::string name = detail::string_member(rules[k], "name", where);
    if (!seen.insert(name).second) fail(ErrorKind::kParse, where + ": duplicate rule name '" + name + "'");
    RuleTree tree;
    if (rules[k].contains("tree")) {
      tree = rule_from_json(rules[k].at("tree"), set.labels, where + ".tree");
    } else if (rules[k].contains("lf")) {
      tree = lf_expr_to_rule(lf_from_json(rules[k].at("lf"), set.labels, where + ".lf"), set.labels);
    } else {
      fail(ErrorKind::kParse, where + ": needs \"tree\" or \"lf\"");
    }
    tree.validate(set.labels.size());
    set.rules.push_back({name, tree});
  }
  return set;
}

inline std::string serialize_rule_set(const RuleSet& set) {
  Json doc;
  doc["labels"] = set.labels.names();
  Json rules = Json::array();
  for (const auto& r : set.rules) {
    Json entry;
    entry["name"] = r.name;
    entry["tree"] = rule_to_json(r.tree, set.labels);
    rules.push_back(std::move(entry));
  }
  doc["rules"] = std::move(rules);
  return doc.dump(2) + "\n";
}

// Registers every rule of the set as an opaque labeler under its own name, so
// {"opaque": "<rule name>"} delegates to that rule. The registry must outlive
// the set's use; self-reference is cut off with a contract-violation error.
inline std::shared_ptr<OpaqueRegistry> registry_for(const RuleSet& set) {
  auto registry = std::make_shared<OpaqueRegistry>();
  std::weak_ptr<OpaqueRegistry> weak = registry;
  for (const auto& rule : set.rules) {
    RuleTree tree = rule.tree;
    std::string name = rule.name;
    registry->add(
        rule.name,
        [tree, name, weak](const Datapoint& x) -> LabelId {
          thread_local int depth = 0;
          if (depth > 32) fail(ErrorKind::kContractViolation, "opaque labeler '" + name + "' recurses without end");
          const auto reg = weak.lock();
          if (!reg) fail(ErrorKind::kUnresolvedPredicate, "opaque registry released");
          ++depth;
          try {
            const LabelId y = evaluate(tree, x, *reg);
            --depth;
            return y;
          } catch (...) {
            --depth;
            throw;
          }
        },
        set.labels.size());
  }
  return registry;
}

// ---- refinement sequences ------------------------------------------------

inline Json sequence_to_json(const RefinementSequence& seq, const LabelSet& labels) {
  Json steps = Json::array();
  for (const auto& s : seq.steps) {
    Json j;
    j["op"] = s.kind == StepKind::kSplit ? "split" : "relabel";
    j["path"] = s.path.bits;
    if (s.kind == StepKind::kSplit) {
      j["pred"] = predicate_to_json(s.predicate, labels);
      j["false"] = labels.name(s.false_label);
      j["true"] = labels.name(s.true_label);
    } else {
      j["label"] = labels.name(s.new_label);
    }
    steps.push_back(std::move(j));
  }
  return steps;
}

inline RefinementSequence sequence_from_json(const Json& steps, const LabelSet& labels) {
  if (!steps.is_array()) fail(ErrorKind::kParse, "refinement sequence must be a list");
  RefinementSequence seq;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::string where = "step " + std::to_string(k);
    const std::string op = detail::string_member(steps[k], "op", where);
    Path path{detail::string_member(steps[k], "path", where)};
    if (op == "split") {
      seq.steps.push_back(RefinementStep::split(std::move(path), predicate_from_json(steps[k].at("pred"), labels, where),
                                                detail::label_member(steps[k], "false", labels, where),
                                                detail::label_member(steps[k], "true", labels, where)));
    } else if (op == "relabel") {
      seq.steps.push_back(RefinementStep::relabel(std::move(path), detail::label_member(steps[k], "label", labels, where)));
    } else {
      fail(ErrorKind::kParse, where + ": unknown op '" + op + "'");
    }
  }
  return seq;
}

// ---- repair instances ----------------------------------------------------

inline std::string write_matrix_csv(const LabelMatrix& m) {
  std::ostringstream out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j == 0 ? "" : ",") << m.at(i, j);
    out << "\n";
  }
  return out.str();
}

inline LabelMatrix read_matrix_csv(const std::string& text) {
  std::vector<std::vector<LabelId>> rows;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<LabelId> row;
    std::stringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) {
      try {
        std::size_t used = 0;
        row.push_back(std::stoi(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorKind::kParse, "matrix line " + std::to_string(line_no) + ": bad cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::kParse, "matrix line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  return LabelMatrix::from_rows(rows);
}

inline std::string ratio_text(const Ratio& r) {
  std::ostringstream out;
  out << r;
  return out.str();
}

inline Ratio ratio_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Ratio::from_double(j.get<double>());
  if (j.is_string()) return Ratio::parse(j.get<std::string>());
  fail(ErrorKind::kParse, where + ": threshold must be a number or \"p/q\" string");
}

inline Json thresholds_to_json(const Thresholds& t) {
  Json j;
  j["accuracy"] = ratio_text(t.accuracy);
  j["evidence"] = ratio_text(t.evidence);
  j["rule_accuracy"] = ratio_text(t.rule_accuracy);
  j["base"] = t.base == AccuracyBase::kVoted ? "voted" : "all";
  return j;
}

inline Thresholds thresholds_from_json(const Json& j) {
  Thresholds t;
  if (j.contains("accuracy")) t.accuracy = ratio_from_json(j.at("accuracy"), "accuracy");
  if (j.contains("evidence")) t.evidence = ratio_from_json(j.at("evidence"), "evidence");
  if (j.contains("rule_accuracy")) t.rule_accuracy = ratio_from_json(j.at("rule_accuracy"), "rule_accuracy");
  if (j.contains("base")) {
    const std::string base = j.at("base").get<std::string>();
    if (base == "voted") {
      t.base = AccuracyBase::kVoted;
    } else if (base == "all") {
      t.base = AccuracyBase::kAll;
    } else {
      fail(ErrorKind::kParse, "thresholds: base must be \"voted\" or \"all\"");
    }
  }
  return t;
}

// Header: {"truth": [...], "label_count": |Y|, "thresholds": {...}}.
inline std::string write_instance_header(const RepairInstance& inst) {
  Json j;
  j["truth"] = inst.truth;
  j["label_count"] = inst.label_count;
  j["thresholds"] = thresholds_to_json(inst.thresholds);
  return j.dump(2) + "\n";
}

inline RepairInstance read_instance(const std::string& matrix_csv, const std::string& header_json) {
  const Json h = parse_json(header_json, "instance header");
  RepairInstance inst;
  inst.votes = read_matrix_csv(matrix_csv);
  try {
    inst.truth = detail::member(h, "truth", "instance header").get<std::vector<LabelId>>();
    inst.label_count = detail::member(h, "label_count", "instance header").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("instance header: ") + e.what());
  }
  if (h.contains("thresholds")) inst.thresholds = thresholds_from_json(h.at("thresholds"));
  inst.validate();
  return inst;
}

inline Json plan_to_json(const RepairPlan& plan) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < plan.target.rows(); ++i) {
    const auto r = plan.target.row(i);
    rows.push_back(std::vector<LabelId>(r.begin(), r.end()));
  }
  Json j;
  j["cost"] = plan.cost;
  j["optimal"] = plan.optimal;
  j["target"] = std::move(rows);
  return j;
}

// ---- datasets ------------------------------------------------------------

namespace detail {

// RFC 4180 style: commas, double-quoted fields, "" escapes a quote.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"' && k + 1 < text.size() && text[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && k + 1 < text.size() && text[k + 1] == '\n') ++k;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) fail(ErrorKind::kParse, "CSV: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::optional<LabelId> dataset_label(const std::string& name, const LabelSet& labels, const std::string& id,
                                            bool allow_abstain) {
  if (name.empty()) return std::nullopt;
  const auto y = labels.find(name);
  if (!y) fail(ErrorKind::kParse, "record '" + id + "': unknown label '" + name + "'");
  if (*y == kAbstain && !allow_abstain) fail(ErrorKind::kParse, "record '" + id + "': ground truth cannot be the abstain label");
  return y;
}

}  // namespace detail

// JSONL records {"id", "text", "label"?, "attrs"?} or, for *.csv files, a
// header row with id,text[,label] and any further columns read as attributes.
// `allow_abstain` admits the abstain label, for files of desired rule outputs.
inline std::vector<Datapoint> parse_dataset(const std::string& text, const LabelSet& labels, bool csv,
                                            bool allow_abstain = false) {
  std::vector<Datapoint> out;
  std::set<std::string> ids;
  auto add = [&](Datapoint x) {
    if (!ids.insert(x.id()).second) fail(ErrorKind::kParse, "duplicate datapoint id '" + x.id() + "'");
    out.push_back(std::move(x));
  };
  if (csv) {
    const auto rows = detail::parse_csv(text);
    if (rows.empty()) return out;
    const auto& header = rows.front();
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) return c;
      }
      return std::nullopt;
    };
    const auto id_col = column("id");
    const auto text_col = column("text");
    const auto label_col = column("label");
    if (!id_col || !text_col) fail(ErrorKind::kParse, "CSV dataset needs id and text columns");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size()) {
        fail(ErrorKind::kParse, "CSV line " + std::to_string(r + 1) + ": expected " + std::to_string(header.size()) + " fields");
      }
      const std::string& id = rows[r][*id_col];
      std::map<std::string, std::string> attrs;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != *id_col && c != *text_col && (!label_col || c != *label_col)) attrs[header[c]] = rows[r][c];
      }
      const auto truth = label_col ? detail::dataset_label(rows[r][*label_col], labels, id, allow_abstain) : std::nullopt;
      add(Datapoint(id, rows[r][*text_col], std::move(attrs), truth));
    }
    return out;
  }
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    const Json rec = parse_json(line, where);
    std::string id;
    if (rec.is_object() && rec.contains("id") && rec.at("id").is_number_integer()) {
      id = std::to_string(rec.at("id").get<long long>());
    } else {
      id = detail::string_member(rec, "id", where);
    }
    const std::string body = detail::string_member(rec, "text", where);
    std::map<std::string, std::string> attrs;
    if (rec.contains("attrs")) {
      if (!rec.at("attrs").is_object()) fail(ErrorKind::kParse, where + ": attrs must be an object");
      for (const auto& [k, v] : rec.at("attrs").items()) {
        if (!v.is_string()) fail(ErrorKind::kParse, where + ": attribute '" + k + "' must be a string");
        attrs[k] = v.get<std::string>();
      }
    }
    std::optional<LabelId> truth;
    if (rec.contains("label") && !rec.at("label").is_null()) {
      if (!rec.at("label").is_string()) fail(ErrorKind::kParse, where + ": label must be a string");
      truth = detail::dataset_label(rec.at("label").get<std::string>(), labels, id, allow_abstain);
    }
    add(Datapoint(id, body, std::move(attrs), truth));
  }
  return out;
}

inline std::vector<Datapoint> load_dataset(const std::filesystem::path& path, const LabelSet& labels,
                                           bool allow_abstain = false) {
  return parse_dataset(read_file(path), labels, path.extension() == ".csv", allow_abstain);
}

inline std::string serialize_dataset(const std::vector<Datapoint>& xs, const LabelSet& labels) {
  std::string out;
  for (const auto& x : xs) {
    Json j;
    j["id"] = x.id();
    j["text"] = x.text();
    if (x.truth()) j["label"] = labels.name(*x.truth());
    if (!x.attrs().empty()) j["attrs"] = x.attrs();
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace rulerepair
