#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace wmsar {

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  // confusion[actual][predicted]
  std::array<std::array<std::int64_t, 2>, 2> confusion = {{{0, 0}, {0, 0}}};
  std::int64_t n = 0;
};

double accuracy(const std::vector<int>& y_hat, const std::vector<int>& y);

// Unweighted mean of per-class F1. A class with zero precision+recall mass
// contributes F1 = 0.
double macro_f1(const std::vector<int>& y_hat, const std::vector<int>& y);

EvalReport evaluate(const std::vector<int>& y_hat, const std::vector<int>& y);

// Recompute accuracy / macro-F1 from a confusion matrix alone.
double accuracy_from_confusion(
    const std::array<std::array<std::int64_t, 2>, 2>& confusion);
double macro_f1_from_confusion(
    const std::array<std::array<std::int64_t, 2>, 2>& confusion);

nlohmann::json eval_report_to_json(const EvalReport& r);

}  // namespace wmsar
