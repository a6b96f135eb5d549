#include "trajscene/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trajscene/error.hpp"

namespace trajscene {

EvalReport evaluate_confusion(const Confusion& confusion) {
  EvalReport r;
  r.confusion = confusion;
  long correct = 0;
  for (std::size_t i = 0; i < kModeCount; ++i) {
    for (std::size_t j = 0; j < kModeCount; ++j) {
      if (confusion[i][j] < 0) throw Error("confusion counts must be non-negative");
      r.total += confusion[i][j];
    }
    correct += confusion[i][i];
  }
  if (r.total == 0) throw Error("cannot evaluate an empty test set");
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);

  int present = 0;
  for (std::size_t c = 0; c < kModeCount; ++c) {
    ClassMetrics m;
    m.mode = kAllModes[c];
    long predicted = 0;
    for (std::size_t i = 0; i < kModeCount; ++i) {
      m.support += confusion[c][i];
      predicted += confusion[i][c];
    }
    const long tp = confusion[c][c];
    m.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    r.per_class.push_back(m);
    if (m.support == 0) {
      r.absent_classes.push_back(m.mode);
      continue;
    }
    ++present;
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
  }
  r.macro_precision /= present;
  r.macro_recall /= present;
  r.macro_f1 /= present;
  return r;
}

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw Error("truth and prediction counts differ");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= static_cast<int>(kModeCount) || predicted[i] < 0 ||
        predicted[i] >= static_cast<int>(kModeCount)) {
      throw Error("class index out of range");
    }
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return evaluate_confusion(c);
}

EvalReport evaluate(const MlpModel& model, const std::vector<LabeledVector>& test_set) {
  if (test_set.empty()) throw Error("cannot evaluate an empty test set");
  std::vector<int> truth, pred;
  for (const auto& s : test_set) {
    truth.push_back(static_cast<int>(s.label));
    pred.push_back(predict(model, s.x));
  }
  return evaluate_predictions(truth, pred);
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : r.per_class) {
    per_class.push_back({{"mode", std::string(to_string(m.mode))},
                         {"support", m.support},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1}});
  }
  nlohmann::json absent = nlohmann::json::array();
  for (auto m : r.absent_classes) absent.push_back(std::string(to_string(m)));
  nlohmann::json labels = nlohmann::json::array();
  for (auto m : kAllModes) labels.push_back(std::string(to_string(m)));
  return {{"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"total", r.total},
          {"labels", labels},
          {"confusion", r.confusion},
          {"per_class", per_class},
          {"absent_classes", absent}};
}

std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>7}  {:>13}  {:>10}  {:>11}\n", "Model", width, "Acc (%)",
                                "Precision (%)", "Recall (%)", "F-Score (%)");
  for (const auto& [name, r] : rows) {
    out += fmt::format("{:<{}}  {:>7.1f}  {:>13.1f}  {:>10.1f}  {:>11.1f}\n", name, width, 100 * r.accuracy,
                       100 * r.macro_precision, 100 * r.macro_recall, 100 * r.macro_f1);
  }
  return out;
}

}  // namespace trajscene
