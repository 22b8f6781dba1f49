#include "tsgc/diff.hpp"

#include <cmath>
#include <random>
#include <string>
#include <unordered_set>

namespace tsgc {
namespace {

std::string shape(const DiffMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, const DiffMatrix& a, const DiffMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

// Adds `g` into the gradient of input `k` of `self` when that input tracks gradients.
inline void accumulate(detail::Node& self, std::size_t k, const Matrix& g) {
  auto& p = *self.parents[k];
  if (p.requires_grad) p.grad += g;
}

}  // namespace

detail::Node& DiffMatrix::node() const {
  if (!node_) throw Error("DiffMatrix: use of an empty handle");
  return *node_;
}

DiffMatrix DiffMatrix::constant(Matrix value) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  return DiffMatrix(std::move(n));
}

DiffMatrix DiffMatrix::parameter(Matrix value) {
  auto n = std::make_shared<detail::Node>();
  n->grad = Matrix::Zero(value.rows(), value.cols());
  n->value = std::move(value);
  n->requires_grad = true;
  return DiffMatrix(std::move(n));
}

void DiffMatrix::zero_grad() {
  auto& n = node();
  if (n.requires_grad) n.grad.setZero();
}

double DiffMatrix::item() const {
  const auto& v = node().value;
  if (v.rows() != 1 || v.cols() != 1) throw Error("item(): matrix is " + shape(*this) + ", not 1x1");
  return v(0, 0);
}

DiffMatrix DiffMatrix::make(Matrix value, std::vector<DiffMatrix> inputs,
                            std::function<void(detail::Node&)> backward) {
  auto n = std::make_shared<detail::Node>();
  for (auto& in : inputs) {
    n->requires_grad = n->requires_grad || in.requires_grad();
    n->parents.push_back(in.node_);
  }
  if (n->requires_grad) {
    n->grad = Matrix::Zero(value.rows(), value.cols());
    n->backward = std::move(backward);
  } else {
    n->parents.clear();
  }
  n->value = std::move(value);
  return DiffMatrix(std::move(n));
}

void backward(const DiffMatrix& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw Error("backward: loss must be 1x1, got " + shape(loss));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.handle().get(), 0);
  seen.insert(loss.handle().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* node : order) {
    if (node->backward) node->grad.setZero();
  }
  order.back()->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

DiffMatrix matmul(const DiffMatrix& a, const DiffMatrix& b) {
  if (a.cols() != b.rows()) throw Error("matmul: shape mismatch " + shape(a) + " * " + shape(b));
  Matrix value = a.value() * b.value();
  return DiffMatrix::make(std::move(value), {a, b}, [](detail::Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    if (self.parents[0]->requires_grad) self.parents[0]->grad.noalias() += self.grad * B.transpose();
    if (self.parents[1]->requires_grad) self.parents[1]->grad.noalias() += A.transpose() * self.grad;
  });
}

DiffMatrix add(const DiffMatrix& a, const DiffMatrix& b) {
  require_same_shape("add", a, b);
  return DiffMatrix::make(a.value() + b.value(), {a, b}, [](detail::Node& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, self.grad);
  });
}

DiffMatrix sub(const DiffMatrix& a, const DiffMatrix& b) {
  require_same_shape("sub", a, b);
  return DiffMatrix::make(a.value() - b.value(), {a, b}, [](detail::Node& self) {
    accumulate(self, 0, self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->grad -= self.grad;
  });
}

DiffMatrix hadamard(const DiffMatrix& a, const DiffMatrix& b) {
  require_same_shape("hadamard", a, b);
  return DiffMatrix::make(a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    if (self.parents[0]->requires_grad) self.parents[0]->grad += self.grad.cwiseProduct(B);
    if (self.parents[1]->requires_grad) self.parents[1]->grad += self.grad.cwiseProduct(A);
  });
}

DiffMatrix scale(const DiffMatrix& a, double factor) {
  return DiffMatrix::make(a.value() * factor, {a}, [factor](detail::Node& self) {
    accumulate(self, 0, self.grad * factor);
  });
}

DiffMatrix add_scalar(const DiffMatrix& a, double offset) {
  return DiffMatrix::make(a.value().array() + offset, {a},
                          [](detail::Node& self) { accumulate(self, 0, self.grad); });
}

DiffMatrix relu(const DiffMatrix& a) {
  return DiffMatrix::make(a.value().cwiseMax(0.0), {a}, [](detail::Node& self) {
    const auto& A = self.parents[0]->value;
    accumulate(self, 0, (A.array() > 0.0).select(self.grad.array(), 0.0).matrix());
  });
}

DiffMatrix sigmoid(const DiffMatrix& a) {
  Matrix value = a.value().unaryExpr([](double x) {
    // Split by sign so neither branch overflows exp.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return DiffMatrix::make(std::move(value), {a}, [](detail::Node& self) {
    const auto& s = self.value.array();
    accumulate(self, 0, (self.grad.array() * s * (1.0 - s)).matrix());
  });
}

DiffMatrix exp(const DiffMatrix& a) {
  return DiffMatrix::make(a.value().array().exp().matrix(), {a}, [](detail::Node& self) {
    accumulate(self, 0, self.grad.cwiseProduct(self.value));
  });
}

DiffMatrix log(const DiffMatrix& a) {
  if ((a.value().array() <= 0.0).any()) throw Error("log: non-positive entry");
  return DiffMatrix::make(a.value().array().log().matrix(), {a}, [](detail::Node& self) {
    accumulate(self, 0, self.grad.cwiseQuotient(self.parents[0]->value));
  });
}

DiffMatrix transpose(const DiffMatrix& a) {
  return DiffMatrix::make(a.value().transpose(), {a}, [](detail::Node& self) {
    accumulate(self, 0, self.grad.transpose());
  });
}

DiffMatrix sum(const DiffMatrix& a) {
  return DiffMatrix::make(Matrix::Constant(1, 1, a.value().sum()), {a}, [](detail::Node& self) {
    const auto& A = self.parents[0]->value;
    accumulate(self, 0, Matrix::Constant(A.rows(), A.cols(), self.grad(0, 0)));
  });
}

DiffMatrix mean(const DiffMatrix& a) {
  const double count = static_cast<double>(a.value().size());
  if (count == 0) throw Error("mean: empty matrix");
  return scale(sum(a), 1.0 / count);
}

DiffMatrix sum_rows(const DiffMatrix& a) {
  return DiffMatrix::make(a.value().rowwise().sum(), {a}, [](detail::Node& self) {
    const auto cols = self.parents[0]->value.cols();
    accumulate(self, 0, self.grad.replicate(1, cols));
  });
}

DiffMatrix sum_cols(const DiffMatrix& a) {
  return DiffMatrix::make(a.value().colwise().sum(), {a}, [](detail::Node& self) {
    const auto rows = self.parents[0]->value.rows();
    accumulate(self, 0, self.grad.replicate(rows, 1));
  });
}

DiffMatrix row_broadcast(const DiffMatrix& a, const DiffMatrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error("row_broadcast: expected 1x" + std::to_string(a.cols()) + " row, got " + shape(row));
  }
  Matrix value = a.value();
  value.rowwise() += row.value().row(0);
  return DiffMatrix::make(std::move(value), {a, row}, [](detail::Node& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, self.grad.colwise().sum());
  });
}

DiffMatrix log_softmax_rows(const DiffMatrix& a) {
  const Matrix& x = a.value();
  Matrix value(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    value.row(r) = x.row(r).array() - lse;
  }
  return DiffMatrix::make(std::move(value), {a}, [](detail::Node& self) {
    // d/dx_j sum_i g_i (x_i - lse) = g_j - softmax_j * sum_i g_i
    const Matrix soft = self.value.array().exp().matrix();
    Matrix g = self.grad;
    for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r) -= soft.row(r) * self.grad.row(r).sum();
    accumulate(self, 0, g);
  });
}

DiffMatrix clamp(const DiffMatrix& a, double lo, double hi) {
  if (!(lo <= hi)) throw Error("clamp: lo > hi");
  return DiffMatrix::make(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [lo, hi](detail::Node& self) {
    const auto& A = self.parents[0]->value.array();
    accumulate(self, 0, ((A > lo) && (A < hi)).select(self.grad.array(), 0.0).matrix());
  });
}

DiffMatrix apply_mask(const DiffMatrix& a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) throw Error("apply_mask: shape mismatch");
  return DiffMatrix::make(a.value().cwiseProduct(mask), {a}, [mask](detail::Node& self) {
    accumulate(self, 0, self.grad.cwiseProduct(mask));
  });
}

DiffMatrix dropout(const DiffMatrix& a, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  const double survivor = 1.0 / (1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? survivor : 0.0;
  return apply_mask(a, mask);
}

DiffMatrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw Error("glorot_init: dimensions must be positive");
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-r, r);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return DiffMatrix::parameter(std::move(m));
}

}  // namespace tsgc
