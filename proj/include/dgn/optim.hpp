#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgn/data.hpp"
#include "dgn/model.hpp"
#include "dgn/tensor.hpp"

namespace dgn {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled weight decay; params flagged decay=false (norm affines, biases)
// are never decayed.
class AdamW {
 public:
  explicit AdamW(const AdamWConfig& config) : config_(config) {}

  void step(std::vector<NamedParam>& params);
  std::int64_t step_count() const { return t_; }

 private:
  AdamWConfig config_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

void zero_grads(std::vector<NamedParam>& params);

struct TrainRunConfig {
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t master_seed = 2026;
  bool shuffle = true;
  AdamWConfig adamw;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double wall_sec = 0.0;  // console-only; never serialized
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int selected_epoch = -1;  // earliest epoch attaining the max val accuracy
};

struct TrainResult {
  ModelParams best_params;
  TrainLog log;
};

// Batch assembly: [count, C, T] plus the label list.
Tensor make_batch(const EegDataset& dataset, const std::vector<int>& idx, std::size_t first,
                  std::size_t count, std::vector<int>* labels);

TrainResult train(const ModelConfig& config, const ModelParams& init,
                  const EegDataset& dataset, const std::vector<int>& train_idx,
                  const std::vector<int>& val_idx, const TrainRunConfig& run);

struct EvalResult {
  std::vector<int> predictions;  // aligned with idx
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(ModelParams& params, const ModelConfig& config, const EegDataset& dataset,
                    const std::vector<int>& idx, int batch_size = 32);

// One epoch per line: {"epoch":..., "train_loss":..., "train_acc":..., "val_acc":...}
std::string train_log_jsonl(const TrainLog& log);

}  // namespace dgn
