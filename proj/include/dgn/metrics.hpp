#pragma once

#include <string>
#include <vector>

namespace dgn {

struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<std::int64_t> counts;  // rows true, columns predicted

  std::int64_t& at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * n_classes + pred];
  }
  std::int64_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * n_classes + pred];
  }
  std::int64_t total() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  int undefined_ratio_count = 0;  // 0/0 ratios defined as 0
};

struct MetricStat {
  double mean = 0.0;
  double std = 0.0;  // sample std, k-1 denominator
};

struct CvSummary {
  std::vector<MetricsReport> fold_reports;
  MetricStat accuracy, macro_precision, macro_recall, macro_f1;
};

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& predictions,
                          int n_classes);
MetricsReport report(const ConfusionMatrix& cm);
CvSummary summarize_cv(const std::vector<MetricsReport>& reports);

// Fixed key names: acc, prec, rec, f1, per_class, mean, std.
std::string metrics_report_json(const MetricsReport& r);
std::string cv_summary_json(const CvSummary& s);

}  // namespace dgn
