#pragma once

#include <vector>

#include "dgn/rng.hpp"
#include "dgn/tensor.hpp"

namespace dgn {
namespace ops {

// Grouped cross-correlation, stride 1, zero padding P on both ends.
// input [B,Cin,T], weight [Cout,Cin/G,K], bias [Cout] -> [B,Cout,T-K+1+2P].
Tensor conv1d_grouped(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int groups, int padding);

struct BatchNormOpts {
  double eps = 1e-5;
  double momentum = 0.1;
};

// input [B,F] or [B,C,T]; feature axis is axis 1. Train mode normalizes with
// batch statistics (population variance) and updates running stats in place;
// eval mode normalizes with the running stats.
Tensor batchnorm1d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                   Tensor& running_mean, Tensor& running_var, bool training,
                   const BatchNormOpts& opts = {});

// Normalizes each trailing-axis slice; gamma/beta shapes must be a suffix of
// the input shape and are applied with leading-dim broadcast.
Tensor layernorm_lastdim(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                         double eps = 1e-5);

Tensor relu(const Tensor& input);
Tensor gelu(const Tensor& input);  // tanh approximation
Tensor leaky_relu(const Tensor& input, double slope);
Tensor softmax_lastdim(const Tensor& logits);
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);
Tensor dropout(const Tensor& input, double p, bool training, CounterRng& rng);
Tensor avg_pool_time(const Tensor& input);                     // mean over last axis
Tensor concat_channels(const Tensor& a, const Tensor& b);      // [B,C1,T]+[B,C2,T]
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor reshape(const Tensor& input, Shape shape);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, double s);
Tensor sum(const Tensor& a);

double gelu_scalar(double x);

}  // namespace ops
}  // namespace dgn
