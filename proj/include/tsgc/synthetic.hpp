#pragma once

#include <cstdint>

#include "tsgc/dataset.hpp"

namespace tsgc {

/// Three labelled classes of length `length`: sine with period length/4
/// (label 0), a square wave with the same period (1) and a linear trend from
/// -1 to 1 (2), each with additive N(0, noise_sd^2) noise.
Dataset gen_synthetic(int n_per_class, int length, std::uint64_t seed, double noise_sd = 0.1);

}  // namespace tsgc
