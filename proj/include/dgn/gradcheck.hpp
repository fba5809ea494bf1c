#pragma once

#include <functional>
#include <vector>

#include "dgn/tensor.hpp"

namespace dgn {

// Maps input tensors to one output tensor. Closures with internal state
// (dropout masks, batchnorm running stats) must rebuild that state on every
// call so repeated evaluations are identical.
using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t coords_checked = 0;
};

// Compares reverse-mode gradients of sum(w ⊙ fn(inputs)) against central
// finite differences, coordinate by coordinate, in F64. Inputs are drawn
// uniformly from [-2, 2]; w is a fixed random projection so the full
// Jacobian is exercised. Relative error uses max(1, |a|, |n|) in the
// denominator, which degrades to absolute error for small gradients.
GradCheckResult grad_check(const TensorFn& fn, const std::vector<Shape>& input_shapes,
                           std::uint64_t seed, double h = 1e-6);

}  // namespace dgn
