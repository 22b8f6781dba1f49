#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsgc/diff.hpp"

namespace tsgc {

struct AdamState {
  std::int64_t step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

/// One bias-corrected Adam update on every parameter, then zeroes their grads.
/// Moments are allocated on the first call; the parameter list must keep the
/// same order and shapes afterwards.
void adam_step(std::span<DiffMatrix> params, AdamState& state, double lr);

}  // namespace tsgc
