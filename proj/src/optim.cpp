#include "dgn/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dgn/ops.hpp"
#include "dgn/rng.hpp"
#include "json.hpp"

namespace dgn {

void AdamW::step(std::vector<NamedParam>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].learnable) continue;
      m_[i].assign(params[i].tensor.values().size(), 0.0);
      v_[i].assign(params[i].tensor.values().size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::logic_error("AdamW: parameter set changed between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const Precision prec = current_precision();
  for (std::size_t i = 0; i < params.size(); ++i) {
    NamedParam& np = params[i];
    if (!np.learnable) continue;
    if (!np.tensor.has_grad()) {
      throw std::logic_error("AdamW: missing gradient for parameter '" + np.name + "'");
    }
    const std::vector<double>& g = np.tensor.grad_view();
    std::vector<double>& p = np.tensor.values();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    const double decay = np.decay ? config_.weight_decay : 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      const double next = p[j] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps) -
                          config_.lr * decay * p[j];
      p[j] = store_round(next, prec);
    }
  }
}

void zero_grads(std::vector<NamedParam>& params) {
  for (NamedParam& np : params) np.tensor.zero_grad();
}

Tensor make_batch(const EegDataset& dataset, const std::vector<int>& idx, std::size_t first,
                  std::size_t count, std::vector<int>* labels) {
  const int C = dataset.n_channels, T = dataset.n_timesteps;
  Tensor x = Tensor::zeros({static_cast<int>(count), C, T});
  if (labels) labels->clear();
  double* out = x.values().data();
  for (std::size_t i = 0; i < count; ++i) {
    const EegSample& s = dataset.samples[static_cast<std::size_t>(idx[first + i])];
    for (std::size_t j = 0; j < s.data.size(); ++j) {
      out[i * s.data.size() + j] = static_cast<double>(s.data[j]);
    }
    if (labels) labels->push_back(s.label);
  }
  return x;
}

namespace {

int argmax_row(const double* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;  // ties break toward the lower index
  }
  return best;
}

}  // namespace

EvalResult evaluate(ModelParams& params, const ModelConfig& config, const EegDataset& dataset,
                    const std::vector<int>& idx, int batch_size) {
  EvalResult result;
  if (idx.empty()) return result;
  double total_loss = 0.0;
  int correct = 0;
  for (std::size_t first = 0; first < idx.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(static_cast<std::size_t>(batch_size), idx.size() - first);
    std::vector<int> labels;
    Tensor x = make_batch(dataset, idx, first, count, &labels);
    Tensor logits = forward(x, params, config, /*training=*/false, nullptr);
    total_loss += ops::cross_entropy_loss(logits, labels).item() * static_cast<double>(count);
    const double* lv = logits.values().data();
    for (std::size_t i = 0; i < count; ++i) {
      const int pred = argmax_row(lv + i * static_cast<std::size_t>(config.n_classes),
                                  config.n_classes);
      result.predictions.push_back(pred);
      if (pred == labels[i]) ++correct;
    }
  }
  result.mean_loss = total_loss / static_cast<double>(idx.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  return result;
}

TrainResult train(const ModelConfig& config, const ModelParams& init,
                  const EegDataset& dataset, const std::vector<int>& train_idx,
                  const std::vector<int>& val_idx, const TrainRunConfig& run) {
  if (train_idx.empty() || val_idx.empty()) {
    throw std::invalid_argument("train: empty train or validation split");
  }
  if (run.epochs < 1 || run.batch_size < 1) {
    throw std::invalid_argument("train: epochs and batch_size must be >= 1");
  }
  config.validate();

  ModelParams params = clone_params(init, config);
  std::vector<NamedParam> named = named_params(params, config);
  AdamW optimizer(run.adamw);
  CounterRng dropout_rng = derive_rng(run.master_seed, RngStream::kDropout, 0);
  CounterRng shuffle_rng = derive_rng(run.master_seed, RngStream::kShuffle, 0x7261696eull);

  std::vector<int> order = train_idx;
  TrainResult result;
  double best_val = -1.0;

  for (int epoch = 0; epoch < run.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (run.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next_below(i))]);
      }
    }
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(run.batch_size)) {
      const std::size_t count =
          std::min(static_cast<std::size_t>(run.batch_size), order.size() - first);
      std::vector<int> labels;
      Tensor x = make_batch(dataset, order, first, count, &labels);
      Tape tape;
      Tensor loss;
      {
        Tape::Scope scope(tape);
        Tensor logits = forward(x, params, config, /*training=*/true, &dropout_rng);
        loss = ops::cross_entropy_loss(logits, labels);
        const double* lv = logits.values().data();
        for (std::size_t i = 0; i < count; ++i) {
          if (argmax_row(lv + i * static_cast<std::size_t>(config.n_classes),
                         config.n_classes) == labels[i]) {
            ++correct;
          }
        }
        tape.backward(loss);
      }
      loss_sum += loss.item() * static_cast<double>(count);
      optimizer.step(named);
      zero_grads(named);
    }

    // Refresh batchnorm running stats under the end-of-epoch weights before
    // validating; the in-epoch EMA lags the weight updates badly at high
    // learning rates. Dropout stays off so the stats match eval activations.
    {
      ModelConfig refresh_config = config;
      refresh_config.dropout_conv = 0.0;
      refresh_config.dropout_mlp = 0.0;
      for (std::size_t first = 0; first < order.size();
           first += static_cast<std::size_t>(run.batch_size)) {
        const std::size_t count =
            std::min(static_cast<std::size_t>(run.batch_size), order.size() - first);
        Tensor x = make_batch(dataset, order, first, count, nullptr);
        (void)forward(x, params, refresh_config, /*training=*/true, nullptr);
      }
    }

    const EvalResult val = evaluate(params, config, dataset, val_idx, run.batch_size);
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    stats.val_acc = val.accuracy;
    stats.wall_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(stats);

    if (val.accuracy > best_val) {
      best_val = val.accuracy;
      result.best_params = clone_params(params, config);
      result.log.selected_epoch = epoch + 1;
    }
  }
  return result;
}

std::string train_log_jsonl(const TrainLog& log) {
  std::string out;
  for (const EpochStats& e : log.epochs) {
    nlohmann::ordered_json line;
    line["epoch"] = e.epoch;
    line["train_loss"] = e.train_loss;
    line["train_acc"] = e.train_acc;
    line["val_acc"] = e.val_acc;
    out += line.dump();
    out += "\n";
  }
  return out;
}

}  // namespace dgn
