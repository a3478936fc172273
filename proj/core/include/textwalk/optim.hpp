#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "textwalk/matrix.hpp"

namespace textwalk {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  static AdamState like(std::span<const Matrix* const> params);
};

// Bias-corrected Adam over the touched rows of each gradient; untouched rows
// and their moments are left alone. Clears the gradients afterwards. Throws
// NonFiniteGradient before modifying anything if a touched entry is not
// finite.
void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<TensorGrad> grads,
               double learning_rate);

}  // namespace textwalk
