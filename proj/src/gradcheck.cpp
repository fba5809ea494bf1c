#include "dgn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dgn/ops.hpp"
#include "dgn/rng.hpp"

namespace dgn {

GradCheckResult grad_check(const TensorFn& fn, const std::vector<Shape>& input_shapes,
                           std::uint64_t seed, double h) {
  PrecisionScope f64(Precision::kF64);
  CounterRng rng(seed, RngStream::kWeights);

  std::vector<Tensor> inputs;
  inputs.reserve(input_shapes.size());
  for (const Shape& s : input_shapes) {
    Tensor t = Tensor::zeros(s, /*requires_grad=*/true);
    for (double& v : t.values()) v = rng.uniform(-2.0, 2.0);
    inputs.push_back(t);
  }

  // Fixed projection onto a scalar, so every output coordinate contributes.
  Tensor probe = fn(inputs);
  Tensor weights = Tensor::zeros(probe.shape());
  for (double& v : weights.values()) v = rng.uniform(-1.0, 1.0);

  auto scalar_loss = [&]() { return ops::sum(ops::mul(fn(inputs), weights)).item(); };

  Tape tape;
  {
    Tape::Scope scope(tape);
    Tensor loss = ops::sum(ops::mul(fn(inputs), weights));
    tape.backward(loss);
  }

  GradCheckResult result;
  for (Tensor& input : inputs) {
    const std::vector<double> analytic =
        input.has_grad() ? input.grad() : std::vector<double>(input.values().size(), 0.0);
    for (std::size_t i = 0; i < input.values().size(); ++i) {
      const double orig = input.values()[i];
      input.values()[i] = orig + h;
      const double up = scalar_loss();
      input.values()[i] = orig - h;
      const double down = scalar_loss();
      input.values()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coords_checked;
    }
  }
  return result;
}

}  // namespace dgn
