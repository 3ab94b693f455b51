#include "wmsar/metrics.hpp"

#include <stdexcept>

namespace wmsar {

namespace {

std::array<std::array<std::int64_t, 2>, 2> confusion_of(
    const std::vector<int>& y_hat, const std::vector<int>& y) {
  if (y_hat.size() != y.size() || y.empty())
    throw std::invalid_argument("metrics: empty or mismatched label vectors");
  std::array<std::array<std::int64_t, 2>, 2> c = {{{0, 0}, {0, 0}}};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if ((y[i] != 0 && y[i] != 1) || (y_hat[i] != 0 && y_hat[i] != 1))
      throw std::invalid_argument("metrics: labels must be 0/1");
    c[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(y_hat[i])]++;
  }
  return c;
}

double f1_for_class(const std::array<std::array<std::int64_t, 2>, 2>& c,
                    std::size_t cls) {
  const double tp = static_cast<double>(c[cls][cls]);
  const double fp = static_cast<double>(c[1 - cls][cls]);
  const double fn = static_cast<double>(c[cls][1 - cls]);
  const double denom = 2.0 * tp + fp + fn;
  if (denom == 0.0) return 0.0;
  return 2.0 * tp / denom;
}

}  // namespace

double accuracy_from_confusion(
    const std::array<std::array<std::int64_t, 2>, 2>& c) {
  const std::int64_t n = c[0][0] + c[0][1] + c[1][0] + c[1][1];
  if (n == 0) throw std::invalid_argument("metrics: empty confusion matrix");
  return static_cast<double>(c[0][0] + c[1][1]) / static_cast<double>(n);
}

double macro_f1_from_confusion(
    const std::array<std::array<std::int64_t, 2>, 2>& c) {
  return (f1_for_class(c, 0) + f1_for_class(c, 1)) / 2.0;
}

double accuracy(const std::vector<int>& y_hat, const std::vector<int>& y) {
  return accuracy_from_confusion(confusion_of(y_hat, y));
}

double macro_f1(const std::vector<int>& y_hat, const std::vector<int>& y) {
  return macro_f1_from_confusion(confusion_of(y_hat, y));
}

EvalReport evaluate(const std::vector<int>& y_hat, const std::vector<int>& y) {
  EvalReport r;
  r.confusion = confusion_of(y_hat, y);
  r.n = static_cast<std::int64_t>(y.size());
  r.accuracy = accuracy_from_confusion(r.confusion);
  r.macro_f1 = macro_f1_from_confusion(r.confusion);
  return r;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
  return nlohmann::json{
      {"accuracy", r.accuracy},
      {"macro_f1", r.macro_f1},
      {"n", r.n},
      {"confusion",
       {{"tn", r.confusion[0][0]},
        {"fp", r.confusion[0][1]},
        {"fn", r.confusion[1][0]},
        {"tp", r.confusion[1][1]}}}};
}

}  // namespace wmsar
