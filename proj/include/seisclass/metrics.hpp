#pragma once

// Confusion matrices and per-class / averaged precision, recall and F1.

#include <array>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

/// counts[t-1][p-1]: windows of true class t predicted as p.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& r : counts)
      for (auto c : r) s += c;
    return s;
  }
  std::size_t row_sum(int cls) const {
    std::size_t s = 0;
    for (auto c : counts[static_cast<std::size_t>(cls - 1)]) s += c;
    return s;
  }
  std::size_t col_sum(int cls) const {
    std::size_t s = 0;
    for (const auto& r : counts) s += r[static_cast<std::size_t>(cls - 1)];
    return s;
  }
  std::size_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth - 1)][static_cast<std::size_t>(pred - 1)];
  }
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size()) throw DataError("true and predicted label counts differ");
  if (truth.empty()) throw DataError("no labels to evaluate");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!is_valid_class(truth[i]) || !is_valid_class(pred[i]))
      throw DataError("label out of range at position " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(truth[i] - 1)][static_cast<std::size_t>(pred[i] - 1)];
  }
  return cm;
}

/// Zero denominators give 0 precision / recall.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, int cls) {
  if (!is_valid_class(cls)) throw DataError("class id out of range");
  const auto tp = static_cast<double>(cm.at(cls, cls));
  const auto predicted = static_cast<double>(cm.col_sum(cls));
  const auto actual = static_cast<double>(cm.row_sum(cls));
  ClassMetrics m;
  m.precision = predicted > 0.0 ? tp / predicted : 0.0;
  m.recall = actual > 0.0 ? tp / actual : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  m.support = cm.row_sum(cls);
  return m;
}

inline std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out;
  for (int c = 1; c <= kNumClasses; ++c) out.push_back(class_metrics(cm, c));
  return out;
}

enum class AverageMode { macro, support_weighted };

inline ClassMetrics average_metrics(const std::vector<ClassMetrics>& per_class, AverageMode mode) {
  if (per_class.empty()) throw DataError("no class metrics to average");
  ClassMetrics out;
  for (const auto& m : per_class) out.support += m.support;
  if (mode == AverageMode::macro) {
    const auto k = static_cast<double>(per_class.size());
    for (const auto& m : per_class) {
      out.precision += m.precision / k;
      out.recall += m.recall / k;
      out.f1 += m.f1 / k;
    }
    return out;
  }
  if (out.support == 0) throw DataError("support-weighted average over zero total support");
  const auto total = static_cast<double>(out.support);
  for (const auto& m : per_class) {
    const double w = static_cast<double>(m.support) / total;
    out.precision += w * m.precision;
    out.recall += w * m.recall;
    out.f1 += w * m.f1;
  }
  return out;
}

struct Report {
  std::string text;
  std::string csv;
};

inline Report render_report(const ConfusionMatrix& cm, const std::vector<ClassMetrics>& per_class,
                            const ClassMetrics& macro, const ClassMetrics& weighted, const std::string& title = {}) {
  std::ostringstream t, c;
  if (!title.empty()) t << title << "\n\n";
  t << "Confusion matrix (rows = true class, columns = predicted class)\n";
  t << "          pred-1  pred-2  pred-3\n";
  for (int r = 1; r <= kNumClasses; ++r) {
    t << "Class-" << r << "  ";
    for (int p = 1; p <= kNumClasses; ++p) {
      const auto s = std::to_string(cm.at(r, p));
      t << std::string(8 - std::min<std::size_t>(8, s.size()), ' ') << s;
    }
    t << '\n';
  }
  t << "\nState       Precision  Recall  F1-score  Support\n";
  const auto line = [&](const std::string& name, const ClassMetrics& m) {
    std::string padded = name + std::string(name.size() < 12 ? 12 - name.size() : 1, ' ');
    t << padded << text::format_fixed(m.precision, 2) << "       " << text::format_fixed(m.recall, 2) << "    "
      << text::format_fixed(m.f1, 2) << "      " << m.support << '\n';
  };
  c << "class,precision,recall,f1,support\n";
  const auto row = [&](const std::string& name, const ClassMetrics& m) {
    c << name << ',' << text::format_fixed(m.precision, 6) << ',' << text::format_fixed(m.recall, 6) << ','
      << text::format_fixed(m.f1, 6) << ',' << m.support << '\n';
  };
  for (std::size_t i = 0; i < per_class.size(); ++i) {
    line("Class-" + std::to_string(i + 1), per_class[i]);
    row(std::to_string(i + 1), per_class[i]);
  }
  line("macro", macro);
  line("weighted", weighted);
  row("macro", macro);
  row("weighted", weighted);
  t << "\nPrecision or recall with a zero denominator is reported as 0.\n";
  return {t.str(), c.str()};
}

}  // namespace seisclass
