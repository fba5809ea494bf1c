#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgn/data.hpp"
#include "dgn/metrics.hpp"
#include "dgn/model.hpp"
#include "dgn/optim.hpp"

namespace dgn {

struct CvRunConfig {
  ModelConfig model;
  TrainRunConfig run;
  Protocol protocol = Protocol::kIntra;
  int folds = 5;
  int jobs = 1;  // parallelism across folds only; per-fold work is sequential
};

struct FoldOutcome {
  MetricsReport test_report;
  TrainLog log;
  ModelParams best_params;
};

struct CvResult {
  FoldPlan plan;
  std::vector<FoldOutcome> folds;
  CvSummary summary;
};

// Per-fold seeds derive from (master_seed, fold index), so results are
// identical regardless of the job count.
std::uint64_t fold_seed(std::uint64_t master_seed, int fold);

CvResult run_cv(const EegDataset& dataset, const CvRunConfig& config);

struct DatasetInfo {
  std::string path;
  std::uint64_t fingerprint = 0;
};

std::string manifest_json(const CvRunConfig& config, const EegDataset& dataset,
                          const DatasetInfo& info, const CvResult& result,
                          const std::string& tool_version);

}  // namespace dgn
