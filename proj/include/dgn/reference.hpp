#pragma once

#include "dgn/tensor.hpp"

namespace dgn {

// Naive five-nested-loop grouped cross-correlation, kept deliberately free of
// the production kernel's blocking so the two can be compared bit-for-bit.
// Accumulation order: bias first, then input channels outer, kernel taps inner.
inline Tensor conv1d_grouped_reference(const Tensor& input, const Tensor& weight,
                                       const Tensor& bias, int groups, int padding) {
  const int B = input.dim(0), Cin = input.dim(1), T = input.dim(2);
  const int Cout = weight.dim(0), Cpg = weight.dim(1), K = weight.dim(2);
  const int Tout = T - K + 1 + 2 * padding;
  const int CoutPg = Cout / groups;
  Tensor out = Tensor::zeros({B, Cout, Tout});
  const Precision prec = current_precision();
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Cout; ++co) {
      const int base = (co / CoutPg) * Cpg;
      for (int t = 0; t < Tout; ++t) {
        double acc = bias.values()[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < Cpg; ++ci) {
          for (int k = 0; k < K; ++k) {
            const int tin = t + k - padding;
            if (tin < 0 || tin >= T) continue;
            acc += weight.values()[(static_cast<std::size_t>(co) * Cpg + ci) * K + k] *
                   input.values()[(static_cast<std::size_t>(b) * Cin + base + ci) * T + tin];
          }
        }
        out.values()[(static_cast<std::size_t>(b) * Cout + co) * Tout + t] =
            store_round(acc, prec);
      }
    }
  }
  return out;
}

}  // namespace dgn
