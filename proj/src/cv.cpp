#include "dgn/cv.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dgn/rng.hpp"
#include "json.hpp"

namespace dgn {

std::uint64_t fold_seed(std::uint64_t master_seed, int fold) {
  return master_seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(fold + 1));
}

CvResult run_cv(const EegDataset& dataset, const CvRunConfig& config) {
  dataset.validate();
  if (dataset.samples.empty()) {
    throw std::invalid_argument("run_cv: empty dataset");
  }
  if (dataset.n_classes != config.model.n_classes) {
    throw std::invalid_argument("run_cv: dataset has " + std::to_string(dataset.n_classes) +
                                " classes, model expects " +
                                std::to_string(config.model.n_classes));
  }

  CvResult result;
  result.plan = config.protocol == Protocol::kIntra
                    ? make_intra_folds(dataset, config.folds, config.run.master_seed)
                    : make_inter_folds(dataset, config.folds, config.run.master_seed);
  result.folds.resize(result.plan.folds.size());

  auto run_fold = [&](int f) {
    PrecisionScope f32(Precision::kF32);
    const Fold& fold = result.plan.folds[static_cast<std::size_t>(f)];
    const std::uint64_t seed = fold_seed(config.run.master_seed, f);
    CounterRng init_rng = derive_rng(seed, RngStream::kWeights, 0);
    ModelParams init = init_params(config.model, init_rng);
    TrainRunConfig fold_run = config.run;
    fold_run.master_seed = seed;
    TrainResult trained =
        train(config.model, init, dataset, fold.train_idx, fold.val_idx, fold_run);
    EvalResult test =
        evaluate(trained.best_params, config.model, dataset, fold.test_idx, fold_run.batch_size);
    std::vector<int> truth;
    truth.reserve(fold.test_idx.size());
    for (int i : fold.test_idx) truth.push_back(dataset.samples[static_cast<std::size_t>(i)].label);
    FoldOutcome& out = result.folds[static_cast<std::size_t>(f)];
    out.test_report = report(confusion(truth, test.predictions, dataset.n_classes));
    out.log = trained.log;
    out.best_params = trained.best_params;
  };

  const int k = static_cast<int>(result.plan.folds.size());
  const int jobs = std::max(1, std::min(config.jobs, k));
  if (jobs == 1) {
    for (int f = 0; f < k; ++f) run_fold(f);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w]() {
        for (int f = w; f < k; f += jobs) run_fold(f);
      });
    }
    for (std::thread& t : workers) t.join();
  }

  std::vector<MetricsReport> reports;
  for (const FoldOutcome& f : result.folds) reports.push_back(f.test_report);
  result.summary = summarize_cv(reports);
  return result;
}

std::string manifest_json(const CvRunConfig& config, const EegDataset& dataset,
                          const DatasetInfo& info, const CvResult& result,
                          const std::string& tool_version) {
  nlohmann::ordered_json j;
  j["tool"] = {{"name", "dgn"}, {"version", tool_version}};
  {
    std::ostringstream fp;
    fp << "0x" << std::hex << info.fingerprint;
    j["dataset"] = nlohmann::ordered_json{{"path", info.path},
                                          {"fingerprint", fp.str()},
                                          {"n_samples", dataset.samples.size()},
                                          {"n_channels", dataset.n_channels},
                                          {"n_timesteps", dataset.n_timesteps},
                                          {"n_classes", dataset.n_classes},
                                          {"sampling_rate_hz", dataset.sampling_rate_hz}};
  }
  j["protocol"] = protocol_name(config.protocol);
  j["folds"] = config.folds;
  j["seed"] = config.run.master_seed;
  j["jobs"] = config.jobs;
  const ModelConfig& m = config.model;
  j["model"] = nlohmann::ordered_json{{"variant", variant_name(m.variant)},
                                      {"n_channels", m.n_channels},
                                      {"n_timesteps", m.n_timesteps},
                                      {"n_classes", m.n_classes},
                                      {"delta_step", m.delta_step},
                                      {"hidden_depth", m.hidden_depth},
                                      {"kernel_size", m.kernel_size},
                                      {"mlp_hidden", m.mlp_hidden},
                                      {"dropout_conv", m.dropout_conv},
                                      {"dropout_mlp", m.dropout_mlp},
                                      {"leaky_slope", m.leaky_slope},
                                      {"pointwise_groups", m.pointwise_groups()},
                                      {"param_count", param_count(m)}};
  j["train"] = nlohmann::ordered_json{{"epochs", config.run.epochs},
                                      {"batch_size", config.run.batch_size},
                                      {"lr", config.run.adamw.lr},
                                      {"beta1", config.run.adamw.beta1},
                                      {"beta2", config.run.adamw.beta2},
                                      {"eps", config.run.adamw.eps},
                                      {"weight_decay", config.run.adamw.weight_decay},
                                      {"shuffle", config.run.shuffle},
                                      {"selection", "best_val_acc"}};
  j["results"] = nlohmann::ordered_json::parse(cv_summary_json(result.summary));
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    const Fold& fold = result.plan.folds[f];
    folds.push_back({{"fold", f},
                     {"train", fold.train_idx.size()},
                     {"val", fold.val_idx.size()},
                     {"test", fold.test_idx.size()},
                     {"selected_epoch", result.folds[f].log.selected_epoch}});
  }
  j["fold_plan"] = folds;
  return j.dump(2) + "\n";
}

}  // namespace dgn
