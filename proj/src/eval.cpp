#include "ser/eval.hpp"

#include <cstdio>
#include <filesystem>

#include "ser/dataset.hpp"
#include "ser/svg.hpp"
#include "ser/textio.hpp"

namespace ser::eval {

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t v : counts) s += v;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += at(i, i);
  return s;
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          std::size_t n_classes) {
  if (truth.empty() || truth.size() != predicted.size())
    throw std::invalid_argument("confusion: need equal-length nonempty label vectors");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes)
      throw std::invalid_argument("confusion: label outside [0, " +
                                  std::to_string(n_classes) + ") at index " +
                                  std::to_string(i));
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm, std::string model_id, std::string split) {
  if (cm.n == 0 || cm.total() == 0) throw std::invalid_argument("metrics: empty matrix");
  MetricsReport r;
  r.model_id = std::move(model_id);
  r.split = std::move(split);
  r.cm = cm;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());

  double weighted = 0.0;
  for (std::size_t c = 0; c < cm.n; ++c) {
    std::size_t tp = cm.at(c, c), row = 0, col = 0;
    for (std::size_t j = 0; j < cm.n; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    ClassMetrics m;
    m.support = row;
    m.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    r.macro_f1 += m.f1;
    weighted += m.f1 * static_cast<double>(m.support);
    r.per_class.push_back(m);
  }
  r.macro_f1 /= static_cast<double>(cm.n);
  r.weighted_f1 = weighted / static_cast<double>(cm.total());
  return r;
}

void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
  j = nlohmann::json{{"n", cm.n}, {"counts", cm.counts}};
}

void from_json(const nlohmann::json& j, ConfusionMatrix& cm) {
  j.at("n").get_to(cm.n);
  j.at("counts").get_to(cm.counts);
  if (cm.counts.size() != cm.n * cm.n)
    throw std::invalid_argument("confusion matrix json: counts length != n*n");
}

void to_json(nlohmann::json& j, const ClassMetrics& m) {
  j = nlohmann::json{{"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1},
                     {"support", m.support}};
}

void from_json(const nlohmann::json& j, ClassMetrics& m) {
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f1").get_to(m.f1);
  j.at("support").get_to(m.support);
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"model_id", r.model_id},     {"split", r.split},
                     {"accuracy", r.accuracy},     {"macro_f1", r.macro_f1},
                     {"weighted_f1", r.weighted_f1}, {"per_class", r.per_class},
                     {"confusion", r.cm}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  j.at("model_id").get_to(r.model_id);
  j.at("split").get_to(r.split);
  j.at("accuracy").get_to(r.accuracy);
  j.at("macro_f1").get_to(r.macro_f1);
  j.at("weighted_f1").get_to(r.weighted_f1);
  j.at("per_class").get_to(r.per_class);
  j.at("confusion").get_to(r.cm);
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out;
  for (std::size_t c = 0; c < cm.n; ++c) {
    if (c) out += ",";
    // Class names are the emotion inventory when the matrix is 8x8.
    out += cm.n == kNumEmotions ? to_string(static_cast<Emotion>(c))
                                : "c" + std::to_string(c);
  }
  out += "\n";
  for (std::size_t t = 0; t < cm.n; ++t) {
    for (std::size_t p = 0; p < cm.n; ++p) {
      if (p) out += ",";
      out += std::to_string(cm.at(t, p));
    }
    out += "\n";
  }
  return out;
}

std::string table_line(const std::string& model_id, double accuracy, double f1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " %.1f%% %.3f", accuracy * 100.0, f1);
  return model_id + buf;
}

void emit_report(const MetricsReport& r, const nn::History& history,
                 const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_text_file((dir / "metrics.json").string(), nlohmann::json(r).dump(2) + "\n");
  write_text_file((dir / "confusion.csv").string(), confusion_csv(r.cm));
  write_text_file((dir / "summary.txt").string(),
                  table_line(r.model_id, r.accuracy, r.macro_f1) + "\n");
  if (!history.rows.empty())
    write_text_file((dir / "loss_curve.svg").string(), svg::loss_curves(history));
}

}  // namespace ser::eval
