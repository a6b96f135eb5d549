#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajscene/mlp.hpp"
#include "trajscene/types.hpp"

namespace trajscene {

using Confusion = std::array<std::array<long, kModeCount>, kModeCount>;  // [true][predicted]

struct ClassMetrics {
  ModeLabel mode = ModeLabel::walk;
  long support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion{};
  std::vector<ClassMetrics> per_class;
  std::vector<ModeLabel> absent_classes;  // excluded from the macro means
  long total = 0;
};

/// Metrics from a confusion matrix. 0/0 is taken as 0; macro means cover the
/// classes with non-zero support. Throws Error on an empty matrix.
EvalReport evaluate_confusion(const Confusion& confusion);

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& predicted);

EvalReport evaluate(const MlpModel& model, const std::vector<LabeledVector>& test_set);

nlohmann::json to_json(const EvalReport& report);

/// Aligned plain-text table with Acc / Precision / Recall / F-Score columns
/// in percent, one row per named report.
std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

}  // namespace trajscene
