#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rulerepair/error.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/labels.hpp"

namespace rulerepair {

struct Prediction {
  LabelId label = kAbstain;
  // Indexed by label id; entry 0 stays 0 and the rest sum to 1. Empty when
  // no rule voted on the datapoint.
  std::vector<double> confidence;
};

inline std::vector<LabelId> labels_of(const std::vector<Prediction>& predictions) {
  std::vector<LabelId> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.label);
  return out;
}

namespace detail {

inline LabelId argmax_label(const std::vector<double>& weights) {
  LabelId best = kAbstain;
  for (std::size_t y = 1; y < weights.size(); ++y) {
    if (best == kAbstain || weights[y] > weights[static_cast<std::size_t>(best)]) best = static_cast<LabelId>(y);
  }
  return best;
}

}  // namespace detail

// Plurality of non-abstain votes; ties go to the smallest label id and rows
// without votes predict abstain.
inline std::vector<Prediction> majority_vote(const LabelMatrix& votes, std::size_t label_count) {
  votes.check_labels(label_count);
  std::vector<Prediction> out(votes.rows());
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    std::vector<double> counts(label_count, 0.0);
    double total = 0;
    for (const LabelId v : votes.row(i)) {
      if (v == kAbstain) continue;
      counts[static_cast<std::size_t>(v)] += 1;
      total += 1;
    }
    if (total == 0) continue;
    out[i].label = detail::argmax_label(counts);
    for (double& c : counts) c /= total;
    out[i].confidence = std::move(counts);
  }
  return out;
}

struct EmOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // stop when no posterior moves by more than this
  double initial_accuracy = 0.7;
};

struct EmFit {
  std::vector<Prediction> predictions;
  std::vector<double> accuracies;      // one per rule
  std::vector<double> log_likelihood;  // after each E-step
  int iterations = 0;
};

// One-coin model: rule j votes the true class with probability a_j and each
// other class with (1 - a_j) / (K - 1), abstains carry no information, and
// the class prior is uniform over the K non-abstain labels.
inline EmFit fit_em(const LabelMatrix& votes, std::size_t label_count, const EmOptions& options = {}) {
  votes.check_labels(label_count);
  if (label_count < 2) fail(ErrorKind::kInvalidArgument, "EM needs at least one non-abstain label");
  const std::size_t n = votes.rows();
  const std::size_t m = votes.cols();
  const std::size_t classes = label_count - 1;
  constexpr double kFloor = 1e-6;

  EmFit fit;
  fit.accuracies.assign(m, std::clamp(options.initial_accuracy, kFloor, 1 - kFloor));
  std::vector<std::vector<double>> posterior(n, std::vector<double>(label_count, 0.0));
  std::vector<bool> voted(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (const LabelId v : votes.row(i)) voted[i] = voted[i] || v != kAbstain;
  }

  auto e_step = [&]() {
    double log_likelihood = 0;
    double moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!voted[i]) continue;
      std::vector<double> log_joint(label_count, 0.0);
      for (std::size_t y = 1; y < label_count; ++y) {
        double s = -std::log(static_cast<double>(classes));
        for (std::size_t j = 0; j < m; ++j) {
          const LabelId v = votes.at(i, j);
          if (v == kAbstain || classes == 1) continue;
          const double a = fit.accuracies[j];
          s += std::log(static_cast<std::size_t>(v) == y ? a : (1 - a) / static_cast<double>(classes - 1));
        }
        log_joint[y] = s;
      }
      const double peak = *std::max_element(log_joint.begin() + 1, log_joint.end());
      double z = 0;
      for (std::size_t y = 1; y < label_count; ++y) z += std::exp(log_joint[y] - peak);
      log_likelihood += peak + std::log(z);
      for (std::size_t y = 1; y < label_count; ++y) {
        const double q = std::exp(log_joint[y] - peak) / z;
        moved = std::max(moved, std::fabs(q - posterior[i][y]));
        posterior[i][y] = q;
      }
    }
    fit.log_likelihood.push_back(log_likelihood);
    return moved;
  };

  auto m_step = [&]() {
    for (std::size_t j = 0; j < m; ++j) {
      double agree = 0, total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const LabelId v = votes.at(i, j);
        if (v == kAbstain) continue;
        agree += posterior[i][static_cast<std::size_t>(v)];
        total += 1;
      }
      if (total > 0) fit.accuracies[j] = std::clamp(agree / total, kFloor, 1 - kFloor);
    }
  };

  e_step();
  for (int it = 0; it < options.max_iterations; ++it) {
    m_step();
    fit.iterations = it + 1;
    if (e_step() < options.tolerance) break;
  }

  fit.predictions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!voted[i]) continue;
    fit.predictions[i].label = detail::argmax_label(posterior[i]);
    fit.predictions[i].confidence = posterior[i];
  }
  return fit;
}

inline std::vector<Prediction> em_weighted_vote(const LabelMatrix& votes, std::size_t label_count,
                                                const EmOptions& options = {}) {
  return fit_em(votes, label_count, options).predictions;
}

// votes.csv: a "#labels=" header naming the vocabulary in id order, then one
// comma-separated row of label ids per datapoint.
inline std::string write_votes_csv(const LabelMatrix& votes, const LabelSet& labels) {
  std::ostringstream out;
  out << "#labels=";
  for (std::size_t y = 0; y < labels.size(); ++y) out << (y == 0 ? "" : ",") << labels.names()[y];
  out << "\n";
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    for (std::size_t j = 0; j < votes.cols(); ++j) out << (j == 0 ? "" : ",") << votes.at(i, j);
    out << "\n";
  }
  return out.str();
}

struct VotesFile {
  LabelSet labels;
  LabelMatrix votes;
};

namespace detail {

inline LabelId parse_label_id(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::kParse, "line " + std::to_string(line) + ": not an integer label id: '" + cell + "'");
}

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace detail

inline VotesFile read_votes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#labels=", 0) != 0) {
    fail(ErrorKind::kParse, "votes file must start with a #labels= header");
  }
  std::vector<std::string> names;
  std::stringstream header(line.substr(8));
  for (std::string name; std::getline(header, name, ',');) names.push_back(detail::trim(name));
  LabelSet labels(names);

  std::vector<std::vector<LabelId>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<LabelId> row;
    std::stringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) row.push_back(detail::parse_label_id(detail::trim(cell), line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  LabelMatrix votes = LabelMatrix::from_rows(rows);
  votes.check_labels(labels.size());
  return {std::move(labels), std::move(votes)};
}

inline std::vector<LabelId> read_predictions(const std::string& text, std::size_t expected_rows, std::size_t label_count) {
  std::istringstream in(text);
  std::vector<LabelId> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    const LabelId y = detail::parse_label_id(line, line_no);
    if (y < 0 || static_cast<std::size_t>(y) >= label_count) {
      fail(ErrorKind::kExternal, "line " + std::to_string(line_no) + ": label id " + std::to_string(y) + " out of range");
    }
    out.push_back(y);
  }
  if (out.size() != expected_rows) {
    fail(ErrorKind::kExternal, "expected " + std::to_string(expected_rows) + " predictions, got " + std::to_string(out.size()));
  }
  return out;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// Runs `command <dir>/votes.csv <dir>/predictions.csv` and reads one label id
// per datapoint back.
inline std::vector<Prediction> external_model_adapter(const LabelMatrix& votes, const LabelSet& labels,
                                                      const std::string& command,
                                                      const std::filesystem::path& exchange_dir) {
  if (command.empty()) fail(ErrorKind::kInvalidArgument, "external model command is empty");
  std::filesystem::create_directories(exchange_dir);
  const auto votes_path = exchange_dir / "votes.csv";
  const auto predictions_path = exchange_dir / "predictions.csv";
  {
    std::ofstream out(votes_path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + votes_path.string());
    out << write_votes_csv(votes, labels);
  }
  std::filesystem::remove(predictions_path);
  const std::string line = command + " " + shell_quote(votes_path.string()) + " " + shell_quote(predictions_path.string());
  const int status = std::system(line.c_str());
  if (status != 0) fail(ErrorKind::kExternal, "external model exited with status " + std::to_string(status) + ": " + command);
  std::ifstream in(predictions_path, std::ios::binary);
  if (!in) fail(ErrorKind::kExternal, "external model wrote no " + predictions_path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<Prediction> out;
  for (const LabelId y : read_predictions(buffer.str(), votes.rows(), labels.size())) out.push_back({y, {}});
  return out;
}

// "majority", "em" or "external:<command>".
struct LabelModelSpec {
  enum class Kind { kMajority, kEm, kExternal };
  Kind kind = Kind::kMajority;
  std::string command;

  static LabelModelSpec parse(std::string_view text) {
    if (text == "majority") return {Kind::kMajority, {}};
    if (text == "em") return {Kind::kEm, {}};
    constexpr std::string_view prefix = "external:";
    if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
      return {Kind::kExternal, std::string(text.substr(prefix.size()))};
    }
    fail(ErrorKind::kInvalidArgument, "unknown label model '" + std::string(text) + "'");
  }

  std::string str() const {
    switch (kind) {
      case Kind::kMajority: return "majority";
      case Kind::kEm: return "em";
      case Kind::kExternal: return "external:" + command;
    }
    return "?";
  }
};

inline std::vector<LabelId> predict(const LabelModelSpec& model, const LabelMatrix& votes, const LabelSet& labels,
                                    const std::filesystem::path& exchange_dir = {}) {
  switch (model.kind) {
    case LabelModelSpec::Kind::kMajority: return labels_of(majority_vote(votes, labels.size()));
    case LabelModelSpec::Kind::kEm: return labels_of(em_weighted_vote(votes, labels.size()));
    case LabelModelSpec::Kind::kExternal: {
      const auto dir = exchange_dir.empty() ? std::filesystem::temp_directory_path() / "rulerepair-exchange" : exchange_dir;
      return labels_of(external_model_adapter(votes, labels, model.command, dir));
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown label model");
}

}  // namespace rulerepair
