#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tsgc/diff.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  std::string worst;
};

/// Compares each parameter's accumulated grad against central differences of
/// `loss` (re-evaluated from scratch) with step h. Relative error uses
/// |a - f| / max(1e-6, |a|, |f|) so entries with vanishing gradients do not
/// blow up the ratio.
inline Result check(std::vector<tsgc::DiffMatrix> params, const std::function<tsgc::DiffMatrix()>& loss,
                    double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  tsgc::backward(loss());
  Result r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const tsgc::Matrix analytic = p.grad();
    for (Eigen::Index i = 0; i < p.value().size(); ++i) {
      double& v = p.mutable_value().data()[i];
      const double saved = v;
      v = saved + h;
      const double up = loss().item();
      v = saved - h;
      const double down = loss().item();
      v = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      const double rel = std::abs(a - fd) / std::max({1e-6, std::abs(a), std::abs(fd)});
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = "param " + std::to_string(k) + " entry " + std::to_string(i) + ": analytic " + std::to_string(a) +
                  " vs fd " + std::to_string(fd);
      }
    }
  }
  return r;
}

}  // namespace gradcheck
