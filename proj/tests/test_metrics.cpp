#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wmsar/metrics.hpp"

using namespace wmsar;

TEST_CASE("accuracy is the fraction of exact matches") {
  CHECK(accuracy({1, 0, 1, 1}, {1, 0, 0, 1}) == doctest::Approx(0.75));
  CHECK(accuracy({0, 0}, {0, 0}) == 1.0);
  CHECK(accuracy({1, 1}, {0, 0}) == 0.0);
}

TEST_CASE("macro F1 averages the two class F1 scores") {
  // tp=2 fp=1 fn=0 tn=1: F1(pos)=0.8, F1(neg)=2/3.
  const std::vector<int> y_hat = {1, 1, 1, 0};
  const std::vector<int> y = {1, 1, 0, 0};
  CHECK(macro_f1(y_hat, y) == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("a silent class contributes zero F1") {
  // Never predicting the positive class halves the macro average.
  const std::vector<int> y_hat = {0, 0, 0, 0};
  const std::vector<int> y = {0, 0, 0, 1};
  const double f1_neg = 2.0 * 3.0 / (2.0 * 3.0 + 0.0 + 1.0);
  CHECK(macro_f1(y_hat, y) == doctest::Approx(f1_neg / 2.0));
}

TEST_CASE("evaluate collects counts that reproduce its own metrics") {
  const std::vector<int> y_hat = {1, 0, 1, 1, 0, 0, 1, 0};
  const std::vector<int> y = {1, 1, 1, 0, 0, 1, 1, 0};
  const EvalReport r = evaluate(y_hat, y);
  CHECK(r.n == 8);
  CHECK(r.confusion[1][1] == 3);  // tp
  CHECK(r.confusion[0][1] == 1);  // fp
  CHECK(r.confusion[1][0] == 2);  // fn
  CHECK(r.confusion[0][0] == 2);  // tn
  CHECK(accuracy_from_confusion(r.confusion) == r.accuracy);
  CHECK(macro_f1_from_confusion(r.confusion) == r.macro_f1);
  CHECK(r.accuracy == doctest::Approx(5.0 / 8.0));
}

TEST_CASE("metrics reject malformed inputs") {
  CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy({1}, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy({2}, {1}), std::invalid_argument);
}
