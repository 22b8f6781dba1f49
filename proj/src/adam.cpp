#include "tsgc/adam.hpp"

#include <cmath>

namespace tsgc {

void adam_step(std::span<DiffMatrix> params, AdamState& state, double lr) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw Error("adam_step: parameter count changed");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.rows() != p.rows() || m.cols() != p.cols()) throw Error("adam_step: parameter shape changed");
    const Matrix& g = p.grad();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    auto& value = p.mutable_value();
    value.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + state.eps_hat);
    p.zero_grad();
  }
}

}  // namespace tsgc
