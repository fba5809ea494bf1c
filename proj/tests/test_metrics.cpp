#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <stdexcept>

#include "dgn/metrics.hpp"
#include "doctest.h"

using namespace dgn;

TEST_CASE("confusion tallies pairs, rows are truth") {
  ConfusionMatrix cm = confusion({0, 0, 1, 1, 2, 2}, {0, 1, 1, 1, 2, 0}, 3);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(0, 2) == 0);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.at(2, 0) == 1);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.total() == 6);
  CHECK_THROWS_AS(confusion({0}, {0, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(confusion({2}, {0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(confusion({0}, {-1}, 2), std::invalid_argument);
}

TEST_CASE("empty input gives an all-zero matrix") {
  ConfusionMatrix cm = confusion({}, {}, 3);
  CHECK(cm.total() == 0);
  for (std::int64_t c : cm.counts) CHECK(c == 0);
}

TEST_CASE("six-sample oracle: acc 0.6667, P 0.7222, R 0.6667, F1 0.6556") {
  MetricsReport r = report(confusion({0, 0, 1, 1, 2, 2}, {0, 1, 1, 1, 2, 0}, 3));
  CHECK(r.accuracy == doctest::Approx(0.6667).epsilon(5e-5));
  CHECK(r.macro_precision == doctest::Approx(0.7222).epsilon(5e-5));
  CHECK(r.macro_recall == doctest::Approx(0.6667).epsilon(5e-5));
  CHECK(r.macro_f1 == doctest::Approx(0.6556).epsilon(5e-5));
}

TEST_CASE("perfect predictions give all ones") {
  MetricsReport r = report(confusion({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}, 3));
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_precision == 1.0);
  CHECK(r.macro_recall == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.undefined_ratio_count == 0);
}

TEST_CASE("never-predicted class gets precision 0, macro stays finite") {
  MetricsReport r = report(confusion({0, 1, 1}, {0, 0, 0}, 2));
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.per_class[1].recall == 0.0);
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.undefined_ratio_count > 0);
  CHECK(r.macro_f1 >= 0.0);
  CHECK(r.macro_f1 <= 1.0);
}

TEST_CASE("empty matrix is rejected") {
  ConfusionMatrix cm = confusion({}, {}, 2);
  CHECK_THROWS_AS(report(cm), std::invalid_argument);
}

TEST_CASE("macro f1 is bracketed by per-class f1") {
  MetricsReport r = report(confusion({0, 0, 1, 1, 2, 2, 2}, {0, 1, 1, 2, 2, 2, 0}, 3));
  double lo = 1.0, hi = 0.0;
  for (const ClassMetrics& c : r.per_class) {
    lo = std::min(lo, c.f1);
    hi = std::max(hi, c.f1);
  }
  CHECK(r.macro_f1 >= lo);
  CHECK(r.macro_f1 <= hi);
}

TEST_CASE("balanced test sets: accuracy equals mean recall") {
  MetricsReport r = report(confusion({0, 0, 1, 1}, {0, 1, 1, 0}, 2));
  CHECK(r.accuracy == doctest::Approx(r.macro_recall));
}

TEST_CASE("summarize_cv: mean and sample std") {
  auto with_acc = [](double a) {
    MetricsReport r;
    r.accuracy = a;
    r.macro_precision = a;
    r.macro_recall = a;
    r.macro_f1 = a;
    return r;
  };
  CvSummary s = summarize_cv({with_acc(0.8), with_acc(1.0)});
  CHECK(s.accuracy.mean == doctest::Approx(0.9));
  CHECK(s.accuracy.std == doctest::Approx(0.1414).epsilon(1e-3));
  CvSummary same = summarize_cv({with_acc(0.7), with_acc(0.7), with_acc(0.7)});
  CHECK(same.accuracy.std < 1e-12);
  CHECK_THROWS_AS(summarize_cv({with_acc(0.5)}), std::invalid_argument);
  // Permutation invariance.
  CvSummary a = summarize_cv({with_acc(0.6), with_acc(0.9), with_acc(0.75)});
  CvSummary b = summarize_cv({with_acc(0.75), with_acc(0.6), with_acc(0.9)});
  CHECK(a.accuracy.mean == b.accuracy.mean);
  CHECK(a.accuracy.std == b.accuracy.std);
}

TEST_CASE("json output uses the fixed key names") {
  MetricsReport r = report(confusion({0, 1}, {0, 1}, 2));
  const std::string j = metrics_report_json(r);
  for (const char* key : {"\"acc\"", "\"prec\"", "\"rec\"", "\"f1\"", "\"per_class\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
  CvSummary s = summarize_cv({r, r});
  const std::string cj = cv_summary_json(s);
  CHECK(cj.find("\"mean\"") != std::string::npos);
  CHECK(cj.find("\"std\"") != std::string::npos);
}
