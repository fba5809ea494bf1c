#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dgn/rng.hpp"
#include "dgn/tensor.hpp"

namespace dgn {

// Ablation variants: which of the three stages are present.
enum class ModelVariant { kFull, kMlpOnly, kDeltaMlp, kGtcMlp };

const char* variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);

struct ModelConfig {
  int n_channels = 17;
  int n_timesteps = 1600;
  int n_classes = 3;
  int delta_step = 1;
  int hidden_depth = 8;   // per-channel feature multiplier D
  int kernel_size = 7;    // odd, residual conv
  int mlp_hidden = 128;   // first MLP width M; second block is M/2
  double dropout_conv = 0.25;
  double dropout_mlp = 0.5;
  double leaky_slope = 0.01;
  // false: the 1x1 conv inside each residual block keeps channels separate
  // (groups = delta channel count); true: it mixes all feature channels.
  bool pointwise_mix_all = false;
  ModelVariant variant = ModelVariant::kFull;

  void validate() const;

  bool has_delta() const {
    return variant == ModelVariant::kFull || variant == ModelVariant::kDeltaMlp;
  }
  bool has_gtc() const {
    return variant == ModelVariant::kFull || variant == ModelVariant::kGtcMlp;
  }
  int gtc_in_channels() const { return has_delta() ? 2 * n_channels : n_channels; }
  int feature_time() const { return has_delta() ? n_timesteps - delta_step : n_timesteps; }
  int pointwise_groups() const { return pointwise_mix_all ? 1 : gtc_in_channels(); }
  int mlp_input_dim() const {
    return has_gtc() ? gtc_in_channels() * hidden_depth : gtc_in_channels() * feature_time();
  }
};

struct BatchNormParams {
  Tensor gamma, beta;               // learnable
  Tensor running_mean, running_var; // state, no gradients
};

struct GtcBlockParams {
  Tensor conv_w, conv_b;  // depthwise temporal conv, kernel K
  BatchNormParams bn;
  Tensor pw_w, pw_b;      // 1x1 conv
};

struct MlpBlockParams {
  Tensor w, b;
  BatchNormParams bn;
};

struct ModelParams {
  // GTC (absent for mlp_only / delta_mlp variants)
  Tensor proj_w, proj_b;  // kernel-1 depthwise projection
  std::array<GtcBlockParams, 2> block;
  Tensor ln_gamma, ln_beta;  // per-channel layer norm affine, shape [Cg, D]
  // MLP head
  MlpBlockParams mlp1, mlp2;
  Tensor out_w, out_b;
};

struct NamedParam {
  std::string name;
  Tensor tensor;
  bool learnable;  // running stats are state, not parameters
  bool decay;      // weight decay applies to conv/linear weights only
};

std::vector<NamedParam> named_params(ModelParams& params, const ModelConfig& config);

struct ForwardTrace {
  Tensor delta_out;
  Tensor projected;
  std::array<Tensor, 2> block_out;
  Tensor pooled;
  Tensor logits;
};

// Parameter-free front end: d(t) = x(t) - x(t-S); channels [0,C) hold
// relu(d), channels [C,2C) hold relu(-d). [B,C,T] -> [B,2C,T-S].
Tensor bidirectional_delta(const Tensor& x, int step);

Tensor gtc_forward(const Tensor& x, ModelParams& params, const ModelConfig& config,
                   bool training, CounterRng* dropout_rng, ForwardTrace* trace = nullptr);
Tensor mlp_forward(const Tensor& embed, ModelParams& params, const ModelConfig& config,
                   bool training, CounterRng* dropout_rng);
Tensor forward(const Tensor& x, ModelParams& params, const ModelConfig& config,
               bool training, CounterRng* dropout_rng, ForwardTrace* trace = nullptr);

ModelParams init_params(const ModelConfig& config, CounterRng& rng);
ModelParams clone_params(const ModelParams& params, const ModelConfig& config);
std::int64_t param_count(const ModelConfig& config);

// DGNW container: magic, version, config fingerprint, named f32 blocks.
std::vector<std::uint8_t> serialize_params(ModelParams& params, const ModelConfig& config);
void save_params(ModelParams& params, const ModelConfig& config, const std::string& path);
ModelParams load_params(const std::string& path, ModelConfig* config_out);
ModelParams load_params_checked(const std::string& path, const ModelConfig& expected);

}  // namespace dgn
