#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "ser/nn/train.hpp"

namespace ser::eval {

struct ConfusionMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> counts;  // row-major; rows = true class, cols = predicted

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : n(classes), counts(classes * classes, 0) {}

  std::size_t& at(std::size_t t, std::size_t p) { return counts[t * n + p]; }
  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * n + p]; }
  std::size_t total() const;
  std::size_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          std::size_t n_classes = 8);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
  std::string model_id;
  std::string split;
  double accuracy = 0.0;
  double macro_f1 = 0.0;     // unweighted mean over classes; the headline number
  double weighted_f1 = 0.0;  // support-weighted, emitted for comparison
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix cm;
  bool operator==(const MetricsReport&) const = default;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic mean;
// all three are 0 whenever a denominator vanishes, so reports never hold
// non-finite values. accuracy = trace/total with integer sums.
MetricsReport metrics(const ConfusionMatrix& cm, std::string model_id = "",
                      std::string split = "");

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void from_json(const nlohmann::json& j, ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const ClassMetrics& m);
void from_json(const nlohmann::json& j, ClassMetrics& m);
void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

// Header row of class names, then n rows x n columns of counts.
std::string confusion_csv(const ConfusionMatrix& cm);

// "<model> <accuracy as percent, 1 decimal>% <f1, 3 decimals>"
std::string table_line(const std::string& model_id, double accuracy, double f1);

// Writes metrics.json, confusion.csv, summary.txt and (when the history is
// nonempty) loss_curve.svg into out_dir, creating it if needed.
void emit_report(const MetricsReport& r, const nn::History& history,
                 const std::string& out_dir);

}  // namespace ser::eval
