#include "dgn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dgn/errors.hpp"
#include "dgn/ops.hpp"

namespace dgn {

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::kFull: return "full";
    case ModelVariant::kMlpOnly: return "mlp_only";
    case ModelVariant::kDeltaMlp: return "delta_mlp";
    case ModelVariant::kGtcMlp: return "gtc_mlp";
  }
  return "full";
}

ModelVariant variant_from_name(const std::string& name) {
  if (name == "full") return ModelVariant::kFull;
  if (name == "mlp_only") return ModelVariant::kMlpOnly;
  if (name == "delta_mlp") return ModelVariant::kDeltaMlp;
  if (name == "gtc_mlp") return ModelVariant::kGtcMlp;
  throw std::invalid_argument("unknown model variant: " + name);
}

void ModelConfig::validate() const {
  if (n_channels < 1 || n_timesteps < 1) {
    throw std::invalid_argument("ModelConfig: need positive channels/timesteps");
  }
  if (n_classes != 2 && n_classes != 3) {
    throw std::invalid_argument("ModelConfig: n_classes must be 2 or 3, got " +
                                std::to_string(n_classes));
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw std::invalid_argument("ModelConfig: kernel_size must be odd, got " +
                                std::to_string(kernel_size));
  }
  if (delta_step < 1 || (has_delta() && delta_step >= n_timesteps)) {
    throw std::invalid_argument("ModelConfig: delta_step " + std::to_string(delta_step) +
                                " must satisfy 1 <= S < T=" + std::to_string(n_timesteps));
  }
  if (hidden_depth < 1) throw std::invalid_argument("ModelConfig: hidden_depth >= 1 required");
  if (mlp_hidden < 2) throw std::invalid_argument("ModelConfig: mlp_hidden >= 2 required");
  if (dropout_conv < 0.0 || dropout_conv >= 1.0 || dropout_mlp < 0.0 || dropout_mlp >= 1.0) {
    throw std::invalid_argument("ModelConfig: dropout probabilities must be in [0,1)");
  }
  if (has_gtc() && kernel_size > feature_time()) {
    throw std::invalid_argument("ModelConfig: kernel_size exceeds the temporal extent");
  }
}

Tensor bidirectional_delta(const Tensor& x, int step) {
  if (x.rank() != 3) {
    throw std::invalid_argument("bidirectional_delta: expected [B,C,T], got " +
                                shape_str(x.shape()));
  }
  const int B = x.dim(0), C = x.dim(1), T = x.dim(2);
  if (step < 1 || step >= T) {
    throw std::invalid_argument("bidirectional_delta: step " + std::to_string(step) +
                                " must satisfy 1 <= S < T=" + std::to_string(T));
  }
  const int To = T - step;
  const bool traced = tracing({&x});
  Tensor out = Tensor::zeros({B, 2 * C, To}, traced);
  if (traced) out.impl()->tape = Tape::active();
  const Precision prec = current_precision();
  const double* xv = x.values().data();
  double* y = out.values().data();
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double* row = xv + (static_cast<std::size_t>(b) * C + c) * T;
      double* pos = y + (static_cast<std::size_t>(b) * 2 * C + c) * To;
      double* neg = y + (static_cast<std::size_t>(b) * 2 * C + C + c) * To;
      for (int t = 0; t < To; ++t) {
        const double d = row[t + step] - row[t];
        pos[t] = store_round(d > 0.0 ? d : 0.0, prec);
        neg[t] = store_round(d < 0.0 ? -d : 0.0, prec);
      }
    }
  }
  if (traced) {
    auto xi = x.impl();
    auto yi = out.impl();
    Tape::active()->record([=]() {
      if (yi->grad.empty() || !xi->requires_grad) return;
      double* gx = xi->grad_buf().data();
      const double* gy = yi->grad.data();
      const double* xvv = xi->values.data();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const double* row = xvv + (static_cast<std::size_t>(b) * C + c) * T;
          const double* gpos = gy + (static_cast<std::size_t>(b) * 2 * C + c) * To;
          const double* gneg = gy + (static_cast<std::size_t>(b) * 2 * C + C + c) * To;
          double* gxrow = gx + (static_cast<std::size_t>(b) * C + c) * T;
          for (int t = 0; t < To; ++t) {
            const double d = row[t + step] - row[t];
            if (d > 0.0) {
              gxrow[t + step] += gpos[t];
              gxrow[t] -= gpos[t];
            } else if (d < 0.0) {
              gxrow[t + step] -= gneg[t];
              gxrow[t] += gneg[t];
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

Tensor batchnorm(const Tensor& x, BatchNormParams& bn, bool training) {
  return ops::batchnorm1d(x, bn.gamma, bn.beta, bn.running_mean, bn.running_var, training);
}

void require_dropout_rng(bool training, double p, const CounterRng* rng) {
  if (training && p > 0.0 && rng == nullptr) {
    throw std::logic_error("training forward with dropout requires an rng stream");
  }
}

CounterRng& rng_or_dummy(CounterRng* rng) {
  static thread_local CounterRng dummy(0, RngStream::kDropout);
  return rng ? *rng : dummy;
}

}  // namespace

Tensor gtc_forward(const Tensor& x, ModelParams& params, const ModelConfig& config,
                   bool training, CounterRng* dropout_rng, ForwardTrace* trace) {
  const int Cg = config.gtc_in_channels();
  const int D = config.hidden_depth;
  const int K = config.kernel_size;
  if (x.rank() != 3 || x.dim(1) != Cg) {
    throw std::invalid_argument("gtc_forward: expected [B," + std::to_string(Cg) + ",T], got " +
                                shape_str(x.shape()));
  }
  require_dropout_rng(training, config.dropout_conv, dropout_rng);
  const int B = x.dim(0), Tp = x.dim(2);

  // Kernel-1 depthwise projection expands each channel to D features.
  Tensor h = ops::conv1d_grouped(x, params.proj_w, params.proj_b, /*groups=*/Cg, /*padding=*/0);
  if (trace) trace->projected = h;

  const int pad = (K - 1) / 2;
  for (std::size_t i = 0; i < params.block.size(); ++i) {
    GtcBlockParams& blk = params.block[i];
    Tensor f = ops::conv1d_grouped(h, blk.conv_w, blk.conv_b, /*groups=*/Cg * D, pad);
    f = batchnorm(f, blk.bn, training);
    f = ops::gelu(f);
    f = ops::conv1d_grouped(f, blk.pw_w, blk.pw_b, config.pointwise_groups(), /*padding=*/0);
    f = ops::dropout(f, config.dropout_conv, training, rng_or_dummy(dropout_rng));
    h = ops::add(h, f);  // residual: x <- x + f(x)
    if (trace) trace->block_out[i] = h;
  }

  h = ops::reshape(h, {B, Cg, D, Tp});
  h = ops::avg_pool_time(h);  // [B, Cg, D]
  h = ops::layernorm_lastdim(h, params.ln_gamma, params.ln_beta);
  if (trace) trace->pooled = h;
  return h;
}

Tensor mlp_forward(const Tensor& embed, ModelParams& params, const ModelConfig& config,
                   bool training, CounterRng* dropout_rng) {
  const int in_dim = config.mlp_input_dim();
  if (embed.rank() != 2 || embed.dim(1) != in_dim) {
    throw std::invalid_argument("mlp_forward: expected [B," + std::to_string(in_dim) +
                                "], got " + shape_str(embed.shape()));
  }
  require_dropout_rng(training, config.dropout_mlp, dropout_rng);
  CounterRng& rng = rng_or_dummy(dropout_rng);

  Tensor h = ops::linear(embed, params.mlp1.w, params.mlp1.b);
  h = batchnorm(h, params.mlp1.bn, training);
  h = ops::leaky_relu(h, config.leaky_slope);
  h = ops::dropout(h, config.dropout_mlp, training, rng);

  h = ops::linear(h, params.mlp2.w, params.mlp2.b);
  h = batchnorm(h, params.mlp2.bn, training);
  h = ops::leaky_relu(h, config.leaky_slope);
  h = ops::dropout(h, config.dropout_mlp, training, rng);

  return ops::linear(h, params.out_w, params.out_b);  // raw logits
}

Tensor forward(const Tensor& x, ModelParams& params, const ModelConfig& config,
               bool training, CounterRng* dropout_rng, ForwardTrace* trace) {
  config.validate();
  if (x.rank() != 3 || x.dim(1) != config.n_channels || x.dim(2) != config.n_timesteps) {
    throw std::invalid_argument("forward: expected [B," + std::to_string(config.n_channels) +
                                "," + std::to_string(config.n_timesteps) + "], got " +
                                shape_str(x.shape()));
  }
  Tensor h = x;
  if (config.has_delta()) {
    h = bidirectional_delta(h, config.delta_step);
    if (trace) trace->delta_out = h;
  }
  if (config.has_gtc()) {
    h = gtc_forward(h, params, config, training, dropout_rng, trace);
  }
  h = ops::reshape(h, {x.dim(0), config.mlp_input_dim()});
  Tensor logits = mlp_forward(h, params, config, training, dropout_rng);
  if (trace) trace->logits = logits;
  return logits;
}

namespace {

Tensor uniform_init(Shape shape, int fan_in, CounterRng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  const double bound = std::sqrt(1.0 / fan_in);
  const Precision prec = current_precision();
  for (double& v : t.values()) v = store_round(rng.uniform(-bound, bound), prec);
  return t;
}

BatchNormParams init_bn(int features) {
  BatchNormParams bn;
  bn.gamma = Tensor::full({features}, 1.0, /*requires_grad=*/true);
  bn.beta = Tensor::zeros({features}, /*requires_grad=*/true);
  bn.running_mean = Tensor::zeros({features});
  bn.running_var = Tensor::full({features}, 1.0);
  return bn;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, CounterRng& rng) {
  config.validate();
  ModelParams p;
  if (config.has_gtc()) {
    const int Cg = config.gtc_in_channels();
    const int D = config.hidden_depth;
    const int K = config.kernel_size;
    p.proj_w = uniform_init({Cg * D, 1, 1}, 1, rng);
    p.proj_b = Tensor::zeros({Cg * D}, true);
    const int pw_fan = config.pointwise_mix_all ? Cg * D : D;
    for (auto& blk : p.block) {
      blk.conv_w = uniform_init({Cg * D, 1, K}, K, rng);
      blk.conv_b = Tensor::zeros({Cg * D}, true);
      blk.bn = init_bn(Cg * D);
      blk.pw_w = uniform_init({Cg * D, pw_fan, 1}, pw_fan, rng);
      blk.pw_b = Tensor::zeros({Cg * D}, true);
    }
    p.ln_gamma = Tensor::full({Cg, D}, 1.0, true);
    p.ln_beta = Tensor::zeros({Cg, D}, true);
  }
  const int in_dim = config.mlp_input_dim();
  const int M = config.mlp_hidden;
  const int M2 = M / 2;
  p.mlp1.w = uniform_init({M, in_dim}, in_dim, rng);
  p.mlp1.b = Tensor::zeros({M}, true);
  p.mlp1.bn = init_bn(M);
  p.mlp2.w = uniform_init({M2, M}, M, rng);
  p.mlp2.b = Tensor::zeros({M2}, true);
  p.mlp2.bn = init_bn(M2);
  p.out_w = uniform_init({config.n_classes, M2}, M2, rng);
  p.out_b = Tensor::zeros({config.n_classes}, true);
  return p;
}

std::vector<NamedParam> named_params(ModelParams& p, const ModelConfig& config) {
  std::vector<NamedParam> out;
  auto add = [&out](const std::string& name, const Tensor& t, bool learnable, bool decay) {
    if (t.defined()) out.push_back({name, t, learnable, decay});
  };
  auto add_bn = [&](const std::string& prefix, BatchNormParams& bn) {
    add(prefix + ".gamma", bn.gamma, true, false);
    add(prefix + ".beta", bn.beta, true, false);
    add(prefix + ".running_mean", bn.running_mean, false, false);
    add(prefix + ".running_var", bn.running_var, false, false);
  };
  if (config.has_gtc()) {
    add("proj.w", p.proj_w, true, true);
    add("proj.b", p.proj_b, true, false);
    for (std::size_t i = 0; i < p.block.size(); ++i) {
      const std::string base = "block" + std::to_string(i);
      add(base + ".conv.w", p.block[i].conv_w, true, true);
      add(base + ".conv.b", p.block[i].conv_b, true, false);
      add_bn(base + ".bn", p.block[i].bn);
      add(base + ".pw.w", p.block[i].pw_w, true, true);
      add(base + ".pw.b", p.block[i].pw_b, true, false);
    }
    add("post_ln.gamma", p.ln_gamma, true, false);
    add("post_ln.beta", p.ln_beta, true, false);
  }
  add("mlp1.w", p.mlp1.w, true, true);
  add("mlp1.b", p.mlp1.b, true, false);
  add_bn("mlp1.bn", p.mlp1.bn);
  add("mlp2.w", p.mlp2.w, true, true);
  add("mlp2.b", p.mlp2.b, true, false);
  add_bn("mlp2.bn", p.mlp2.bn);
  add("out.w", p.out_w, true, true);
  add("out.b", p.out_b, true, false);
  return out;
}

ModelParams clone_params(const ModelParams& params, const ModelConfig& config) {
  auto c = [](const Tensor& t) { return t.defined() ? t.clone() : Tensor(); };
  ModelParams out;
  if (config.has_gtc()) {
    out.proj_w = c(params.proj_w);
    out.proj_b = c(params.proj_b);
    for (std::size_t i = 0; i < params.block.size(); ++i) {
      out.block[i].conv_w = c(params.block[i].conv_w);
      out.block[i].conv_b = c(params.block[i].conv_b);
      out.block[i].bn.gamma = c(params.block[i].bn.gamma);
      out.block[i].bn.beta = c(params.block[i].bn.beta);
      out.block[i].bn.running_mean = c(params.block[i].bn.running_mean);
      out.block[i].bn.running_var = c(params.block[i].bn.running_var);
      out.block[i].pw_w = c(params.block[i].pw_w);
      out.block[i].pw_b = c(params.block[i].pw_b);
    }
    out.ln_gamma = c(params.ln_gamma);
    out.ln_beta = c(params.ln_beta);
  }
  auto cb = [&c](const MlpBlockParams& b) {
    MlpBlockParams r;
    r.w = c(b.w);
    r.b = c(b.b);
    r.bn.gamma = c(b.bn.gamma);
    r.bn.beta = c(b.bn.beta);
    r.bn.running_mean = c(b.bn.running_mean);
    r.bn.running_var = c(b.bn.running_var);
    return r;
  };
  out.mlp1 = cb(params.mlp1);
  out.mlp2 = cb(params.mlp2);
  out.out_w = c(params.out_w);
  out.out_b = c(params.out_b);
  return out;
}

std::int64_t param_count(const ModelConfig& config) {
  config.validate();
  std::int64_t total = 0;  // the delta stage contributes exactly zero
  if (config.has_gtc()) {
    const std::int64_t Ch = static_cast<std::int64_t>(config.gtc_in_channels()) * config.hidden_depth;
    const std::int64_t pw_fan = config.pointwise_mix_all ? Ch : config.hidden_depth;
    total += Ch + Ch;                                // projection w + b
    total += 2 * (Ch * config.kernel_size + Ch       // depthwise conv w + b
                  + 2 * Ch                           // bn gamma + beta
                  + Ch * pw_fan + Ch);               // pointwise w + b
    total += 2 * Ch;                                 // layer norm gamma + beta
  }
  const std::int64_t in_dim = config.mlp_input_dim();
  const std::int64_t M = config.mlp_hidden;
  const std::int64_t M2 = M / 2;
  total += M * in_dim + M + 2 * M;
  total += M2 * M + M2 + 2 * M2;
  total += static_cast<std::int64_t>(config.n_classes) * M2 + config.n_classes;
  return total;
}

// --- DGNW serialization ----------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'G', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::vector<std::uint8_t> config_fingerprint(const ModelConfig& c) {
  std::vector<std::uint8_t> fp;
  put_u32(fp, static_cast<std::uint32_t>(c.n_channels));
  put_u32(fp, static_cast<std::uint32_t>(c.n_timesteps));
  put_u32(fp, static_cast<std::uint32_t>(c.n_classes));
  put_u32(fp, static_cast<std::uint32_t>(c.delta_step));
  put_u32(fp, static_cast<std::uint32_t>(c.hidden_depth));
  put_u32(fp, static_cast<std::uint32_t>(c.kernel_size));
  put_u32(fp, static_cast<std::uint32_t>(c.mlp_hidden));
  put_f32(fp, static_cast<float>(c.dropout_conv));
  put_f32(fp, static_cast<float>(c.dropout_mlp));
  put_f32(fp, static_cast<float>(c.leaky_slope));
  fp.push_back(c.pointwise_mix_all ? 1 : 0);
  fp.push_back(static_cast<std::uint8_t>(c.variant));
  return fp;
}

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t offset() const { return off_; }

  const std::uint8_t* bytes(std::size_t n, const char* what) {
    if (off_ + n > size_) throw FormatError(std::string("truncated ") + what, off_);
    const std::uint8_t* p = data_ + off_;
    off_ += n;
    return p;
  }

  std::uint16_t u16(const char* what) {
    const std::uint8_t* p = bytes(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32(const char* what) {
    const std::uint8_t* p = bytes(4, what);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t off_ = 0;
};

ModelConfig config_from_fingerprint(ByteReader& r) {
  ModelConfig c;
  c.n_channels = static_cast<int>(r.u32("n_channels"));
  c.n_timesteps = static_cast<int>(r.u32("n_timesteps"));
  c.n_classes = static_cast<int>(r.u32("n_classes"));
  c.delta_step = static_cast<int>(r.u32("delta_step"));
  c.hidden_depth = static_cast<int>(r.u32("hidden_depth"));
  c.kernel_size = static_cast<int>(r.u32("kernel_size"));
  c.mlp_hidden = static_cast<int>(r.u32("mlp_hidden"));
  c.dropout_conv = r.f32("dropout_conv");
  c.dropout_mlp = r.f32("dropout_mlp");
  c.leaky_slope = r.f32("leaky_slope");
  c.pointwise_mix_all = r.bytes(1, "pointwise_groups")[0] != 0;
  const std::uint8_t var = r.bytes(1, "variant")[0];
  if (var > 3) throw FormatError("bad variant id", r.offset() - 1);
  c.variant = static_cast<ModelVariant>(var);
  return c;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<std::uint8_t> serialize_params(ModelParams& params, const ModelConfig& config) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  const std::vector<std::uint8_t> fp = config_fingerprint(config);
  put_u32(out, static_cast<std::uint32_t>(fp.size()));
  out.insert(out.end(), fp.begin(), fp.end());
  const std::vector<NamedParam> named = named_params(params, config);
  put_u32(out, static_cast<std::uint32_t>(named.size()));
  for (const NamedParam& np : named) {
    put_u16(out, static_cast<std::uint16_t>(np.name.size()));
    out.insert(out.end(), np.name.begin(), np.name.end());
    out.push_back(static_cast<std::uint8_t>(np.tensor.shape().size()));
    for (int d : np.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : np.tensor.values()) put_f32(out, static_cast<float>(v));
  }
  return out;
}

void save_params(ModelParams& params, const ModelConfig& config, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_params(params, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

ModelParams load_params(const std::string& path, ModelConfig* config_out) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.bytes(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad DGNW magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw FormatError("unsupported DGNW version " + std::to_string(version), 4);
  const std::uint32_t fp_len = r.u32("fingerprint length");
  const std::size_t fp_start = r.offset();
  ModelConfig config = config_from_fingerprint(r);
  if (r.offset() - fp_start != fp_len) throw FormatError("fingerprint length mismatch", fp_start);
  config.validate();

  // Skeleton with the canonical shapes for this config.
  CounterRng skeleton_rng(0, RngStream::kWeights);
  ModelParams params = init_params(config, skeleton_rng);
  std::vector<NamedParam> named = named_params(params, config);

  const std::uint32_t n_blocks = r.u32("block count");
  if (n_blocks != named.size()) {
    throw FormatError("expected " + std::to_string(named.size()) + " parameter blocks, file has " +
                          std::to_string(n_blocks),
                      r.offset() - 4);
  }
  for (NamedParam& np : named) {
    const std::uint16_t name_len = r.u16("name length");
    const std::uint8_t* name_bytes = r.bytes(name_len, "name");
    const std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    if (name != np.name) {
      throw FormatError("unexpected parameter block '" + name + "', wanted '" + np.name + "'",
                        r.offset() - name_len);
    }
    const std::uint8_t rank = r.bytes(1, "rank")[0];
    Shape shape;
    for (int i = 0; i < rank; ++i) shape.push_back(static_cast<int>(r.u32("extent")));
    if (shape != np.tensor.shape()) {
      throw FormatError("shape mismatch for '" + name + "': file " + shape_str(shape) +
                            " vs config " + shape_str(np.tensor.shape()),
                        r.offset());
    }
    for (double& v : np.tensor.values()) v = static_cast<double>(r.f32("payload"));
  }
  if (r.offset() != bytes.size()) throw FormatError("trailing bytes after last block", r.offset());
  if (config_out) *config_out = config;
  return params;
}

ModelParams load_params_checked(const std::string& path, const ModelConfig& expected) {
  ModelConfig found;
  ModelParams params = load_params(path, &found);
  if (config_fingerprint(found) != config_fingerprint(expected)) {
    throw FormatError("parameter file config fingerprint does not match the requested config", 12);
  }
  return params;
}

}  // namespace dgn
