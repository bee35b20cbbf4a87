#include "fndet/nn/tensor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "fndet/errors.hpp"

namespace fndet::nn {

namespace {

thread_local bool g_grad_enabled = true;

void check(bool cond, const std::string& msg) {
  if (!cond) throw Error("tensor op: " + msg);
}

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

void Node::ensure_grad() {
  if (!has_grad) {
    grad = Matrix::Zero(value.rows(), value.cols());
    has_grad = true;
  }
}

void Node::accumulate(const Matrix& g) {
  ensure_grad();
  grad += g;
}

void Node::accumulate_block(Eigen::Index row0, Eigen::Index col0, const Matrix& g) {
  ensure_grad();
  grad.block(row0, col0, g.rows(), g.cols()) += g;
}

}  // namespace detail

using detail::Node;

Tensor Tensor::leaf(Matrix value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return from_node(std::move(n));
}

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
  return leaf(Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

const Matrix& Tensor::grad() const {
  check(node_->has_grad, "grad accessed before backward");
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->has_grad = false;
  node_->grad.resize(0, 0);
}

void Tensor::backward() {
  check(defined(), "backward on undefined tensor");
  check(rows() == 1 && cols() == 1, "backward requires a scalar (1x1) tensor");
  check(node_->requires_grad, "backward on a tensor with no grad path");

  // Iterative post-order DFS over grad-requiring ancestors; the reverse of
  // the resulting order is a valid topological order for backprop.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

namespace {

// Builds an op result node. History (parents + backward) is recorded only
// when grad mode is on and some parent participates in differentiation.
Tensor make_op(Matrix value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool track = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p.node()->requires_grad) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(n));
}

Matrix maybe_t(const Matrix& m, bool t) { return t ? Matrix(m.transpose()) : m; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Eigen::Index inner_a = trans_a ? av.rows() : av.cols();
  const Eigen::Index inner_b = trans_b ? bv.cols() : bv.rows();
  check(inner_a == inner_b, "matmul inner dims " + shape_str(av) + " vs " + shape_str(bv));

  Matrix out = maybe_t(av, trans_a) * maybe_t(bv, trans_b);
  auto an = a.node();
  auto bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn, trans_a, trans_b](Node& self) {
    const Matrix& g = self.grad;
    if (an->requires_grad) {
      if (!trans_a) {
        an->accumulate(g * maybe_t(bn->value, !trans_b));
      } else {
        an->accumulate(maybe_t(bn->value, trans_b) * g.transpose());
      }
    }
    if (bn->requires_grad) {
      if (!trans_b) {
        bn->accumulate(maybe_t(an->value, !trans_a) * g);
      } else {
        bn->accumulate(g.transpose() * maybe_t(an->value, trans_a));
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(),
        "add shapes " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value() + b.value(), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(),
        "sub shapes " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value() - b.value(), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(),
        "mul shapes " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad.cwiseProduct(bn->value));
    if (bn->requires_grad) bn->accumulate(self.grad.cwiseProduct(an->value));
  });
}

Tensor scale(const Tensor& a, double s) {
  auto an = a.node();
  return make_op(a.value() * s, {a}, [an, s](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad * s);
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
  check(bias.rows() == 1 && bias.cols() == a.cols(),
        "add_rowvec bias " + shape_str(bias.value()) + " for " + shape_str(a.value()));
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  auto an = a.node();
  auto bn = bias.node();
  return make_op(std::move(out), {a, bias}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(self.grad.colwise().sum());
  });
}

Tensor relu(const Tensor& a) {
  auto an = a.node();
  return make_op(a.value().cwiseMax(0.0), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    Matrix g = (an->value.array() > 0.0).cast<double>() * self.grad.array();
    an->accumulate(g);
  });
}

Tensor gelu(const Tensor& a) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Matrix out = a.value().unaryExpr(
      [inv_sqrt2](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  auto an = a.node();
  return make_op(std::move(out), {a}, [an, inv_sqrt2](Node& self) {
    if (!an->requires_grad) return;
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix d = an->value.unaryExpr([&](double x) {
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      return cdf + x * pdf;
    });
    an->accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor tanh_act(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return std::tanh(x); });
  auto an = a.node();
  return make_op(std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    Matrix d = 1.0 - self.value.array().square();
    an->accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor sigmoid_act(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    // Split by sign to avoid exp overflow.
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  auto an = a.node();
  return make_op(std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    Matrix d = self.value.array() * (1.0 - self.value.array());
    an->accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor rowwise_softmax(const Tensor& a) {
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    Eigen::ArrayXd e = (v.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  auto an = a.node();
  return make_op(std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    const Matrix& y = self.value;
    const Matrix& g = self.grad;
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r) = (g.row(r).array() - dot) * y.row(r).array();
    }
    an->accumulate(dx);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Matrix& v = x.value();
  const Eigen::Index c = v.cols();
  check(gamma.rows() == 1 && gamma.cols() == c, "layer_norm gamma shape");
  check(beta.rows() == 1 && beta.cols() == c, "layer_norm beta shape");

  Matrix xhat(v.rows(), c);
  Eigen::VectorXd inv_std(v.rows());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mean = v.row(r).mean();
    const double var = (v.row(r).array() - mean).square().sum() / static_cast<double>(c);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (v.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  return make_op(std::move(out), {x, gamma, beta},
                 [xn, gn, bn, xhat, inv_std](Node& self) {
    const Matrix& g = self.grad;
    const Eigen::Index c = g.cols();
    if (gn->requires_grad) gn->accumulate(g.cwiseProduct(xhat).colwise().sum());
    if (bn->requires_grad) bn->accumulate(g.colwise().sum());
    if (xn->requires_grad) {
      Matrix dx(g.rows(), c);
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        Eigen::ArrayXd dxhat = g.row(r).array() * gn->value.row(0).array();
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat = (dxhat * xhat.row(r).transpose().array()).mean();
        dx.row(r) = inv_std(r) *
                    (dxhat - mean_dxhat - xhat.row(r).transpose().array() * mean_dxhat_xhat);
      }
      xn->accumulate(dx);
    }
  });
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (!training || rate == 0.0) return x;
  check(rate > 0.0 && rate < 1.0, "dropout rate must be in [0,1)");
  const double keep = 1.0 - rate;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;

  auto xn = x.node();
  return make_op(x.value().cwiseProduct(mask), {x}, [xn, mask](Node& self) {
    if (xn->requires_grad) xn->accumulate(self.grad.cwiseProduct(mask));
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  const Matrix& t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check(ids[i] >= 0 && ids[i] < t.rows(),
          "embedding id " + std::to_string(ids[i]) + " out of range at position " +
              std::to_string(i));
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  auto tn = table.node();
  return make_op(std::move(out), {table}, [tn, ids](Node& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      tn->grad.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Tensor slice_rows(const Tensor& x, Eigen::Index start, Eigen::Index n) {
  check(start >= 0 && n >= 0 && start + n <= x.rows(), "slice_rows range");
  auto xn = x.node();
  return make_op(x.value().middleRows(start, n), {x}, [xn, start](Node& self) {
    if (xn->requires_grad) xn->accumulate_block(start, 0, self.grad);
  });
}

Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index n) {
  check(start >= 0 && n >= 0 && start + n <= x.cols(), "slice_cols range");
  auto xn = x.node();
  return make_op(x.value().middleCols(start, n), {x}, [xn, start](Node& self) {
    if (xn->requires_grad) xn->accumulate_block(0, start, self.grad);
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_rows of nothing");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    check(p.cols() == cols, "concat_rows column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<std::shared_ptr<Node>> pn;
  pn.reserve(parts.size());
  for (const auto& p : parts) pn.push_back(p.node());
  return make_op(std::move(out), parts, [pn](Node& self) {
    Eigen::Index at = 0;
    for (const auto& n : pn) {
      if (n->requires_grad)
        n->accumulate(self.grad.middleRows(at, n->value.rows()));
      at += n->value.rows();
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_cols of nothing");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const auto& p : parts) {
    check(p.rows() == rows, "concat_cols row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<std::shared_ptr<Node>> pn;
  pn.reserve(parts.size());
  for (const auto& p : parts) pn.push_back(p.node());
  return make_op(std::move(out), parts, [pn](Node& self) {
    Eigen::Index at = 0;
    for (const auto& n : pn) {
      if (n->requires_grad)
        n->accumulate(self.grad.middleCols(at, n->value.cols()));
      at += n->value.cols();
    }
  });
}

Tensor colwise_max(const Tensor& x) {
  const Matrix& v = x.value();
  check(v.rows() > 0, "colwise_max of empty matrix");
  Matrix out(1, v.cols());
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(v.cols()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < v.rows(); ++r)
      if (v(r, c) > v(best, c)) best = r;  // ties keep the first row
    argmax[static_cast<std::size_t>(c)] = best;
    out(0, c) = v(best, c);
  }
  auto xn = x.node();
  return make_op(std::move(out), {x}, [xn, argmax](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (Eigen::Index c = 0; c < self.grad.cols(); ++c)
      xn->grad(argmax[static_cast<std::size_t>(c)], c) += self.grad(0, c);
  });
}

Tensor sum_all(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  auto xn = x.node();
  return make_op(std::move(out), {x}, [xn](Node& self) {
    if (xn->requires_grad)
      xn->accumulate(Matrix::Constant(xn->value.rows(), xn->value.cols(), self.grad(0, 0)));
  });
}

Tensor cross_entropy_with_logits(const Tensor& logits, int target) {
  check(logits.rows() == 1, "cross_entropy_with_logits expects a 1 x K row");
  check(target >= 0 && target < logits.cols(), "cross-entropy target out of range");
  const Matrix& z = logits.value();
  const double m = z.row(0).maxCoeff();
  const double lse = m + std::log((z.row(0).array() - m).exp().sum());
  Matrix out(1, 1);
  out(0, 0) = lse - z(0, target);

  auto ln = logits.node();
  return make_op(std::move(out), {logits}, [ln, target, lse](Node& self) {
    if (!ln->requires_grad) return;
    Matrix p = (ln->value.row(0).array() - lse).exp();
    p(0, target) -= 1.0;
    ln->accumulate(p * self.grad(0, 0));
  });
}

}  // namespace fndet::nn
