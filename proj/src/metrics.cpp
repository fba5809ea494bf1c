#include "dgn/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace dgn {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (std::int64_t c : counts) n += c;
  return n;
}

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& predictions,
                          int n_classes) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(labels.size()) + " labels vs " +
                                std::to_string(predictions.size()) + " predictions");
  }
  if (n_classes < 1) throw std::invalid_argument("confusion: n_classes must be >= 1");
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 ||
        predictions[i] >= n_classes) {
      throw std::invalid_argument("confusion: entry out of range at index " + std::to_string(i));
    }
    ++cm.at(labels[i], predictions[i]);
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (cm.n_classes < 1 || total == 0) {
    throw std::invalid_argument("report: empty confusion matrix");
  }
  MetricsReport r;
  std::int64_t trace = 0;
  for (int c = 0; c < cm.n_classes; ++c) trace += cm.at(c, c);
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);

  for (int c = 0; c < cm.n_classes; ++c) {
    std::int64_t col = 0, row = 0;
    for (int o = 0; o < cm.n_classes; ++o) {
      col += cm.at(o, c);
      row += cm.at(c, o);
    }
    ClassMetrics m;
    const std::int64_t diag = cm.at(c, c);
    if (col == 0) {
      m.precision = 0.0;  // 0/0 defined as 0
      ++r.undefined_ratio_count;
    } else {
      m.precision = static_cast<double>(diag) / static_cast<double>(col);
    }
    if (row == 0) {
      m.recall = 0.0;
      ++r.undefined_ratio_count;
    } else {
      m.recall = static_cast<double>(diag) / static_cast<double>(row);
    }
    if (m.precision + m.recall == 0.0) {
      m.f1 = 0.0;
    } else {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    r.per_class.push_back(m);
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
  }
  r.macro_precision /= cm.n_classes;
  r.macro_recall /= cm.n_classes;
  r.macro_f1 /= cm.n_classes;
  return r;
}

namespace {

MetricStat stat_of(const std::vector<double>& xs) {
  MetricStat s;
  const double k = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= k;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / (k - 1.0));
  return s;
}

}  // namespace

CvSummary summarize_cv(const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("summarize_cv: need at least 2 folds, got " +
                                std::to_string(reports.size()));
  }
  CvSummary s;
  s.fold_reports = reports;
  std::vector<double> acc, prec, rec, f1;
  for (const MetricsReport& r : reports) {
    acc.push_back(r.accuracy);
    prec.push_back(r.macro_precision);
    rec.push_back(r.macro_recall);
    f1.push_back(r.macro_f1);
  }
  s.accuracy = stat_of(acc);
  s.macro_precision = stat_of(prec);
  s.macro_recall = stat_of(rec);
  s.macro_f1 = stat_of(f1);
  return s;
}

namespace {

nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["acc"] = r.accuracy;
  j["prec"] = r.macro_precision;
  j["rec"] = r.macro_recall;
  j["f1"] = r.macro_f1;
  nlohmann::ordered_json pc = nlohmann::ordered_json::array();
  for (const ClassMetrics& m : r.per_class) {
    pc.push_back({{"prec", m.precision}, {"rec", m.recall}, {"f1", m.f1}});
  }
  j["per_class"] = pc;
  return j;
}

}  // namespace

std::string metrics_report_json(const MetricsReport& r) { return report_to_json(r).dump(2); }

std::string cv_summary_json(const CvSummary& s) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const MetricsReport& r : s.fold_reports) folds.push_back(report_to_json(r));
  j["folds"] = folds;
  auto stat = [](const MetricStat& m) {
    return nlohmann::ordered_json{{"mean", m.mean}, {"std", m.std}};
  };
  j["acc"] = stat(s.accuracy);
  j["prec"] = stat(s.macro_precision);
  j["rec"] = stat(s.macro_recall);
  j["f1"] = stat(s.macro_f1);
  return j.dump(2);
}

}  // namespace dgn
