#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fndet/nn/rng.hpp"

namespace fndet::nn {

using Matrix = Eigen::MatrixXd;

// Global (thread-local) switch for graph recording. With grad disabled,
// ops compute values only and the result carries no history, so
// evaluation-mode forward passes allocate nothing beyond the outputs.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool has_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad();
  void accumulate(const Matrix& g);
  void accumulate_block(Eigen::Index row0, Eigen::Index col0, const Matrix& g);
};

}  // namespace detail

// Reverse-mode autodiff tensor over a dense double matrix. Copies share the
// underlying node (shallow, like a handle). Leaves with requires_grad are
// the trainable parameters; ops build a graph whose backward() fills their
// grads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Matrix value, bool requires_grad = false);
  static Tensor constant(Matrix value) { return leaf(std::move(value), false); }
  static Tensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool has_grad() const { return node_->has_grad; }
  const Matrix& grad() const;
  void zero_grad();

  // Backpropagates from this scalar (1x1) tensor through the recorded graph.
  void backward();

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> n);

 private:
  std::shared_ptr<detail::Node> node_;
};

// A named trainable parameter. `decay` marks participation in weight decay
// (biases and layer-norm parameters conventionally opt out).
struct NamedParam {
  std::string name;
  Tensor tensor;
  bool decay = true;
};

// ---- graph ops -------------------------------------------------------------

// C = op_a(A) * op_b(B) with optional transposes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
// Adds a 1 x C bias row to every row of a.
Tensor add_rowvec(const Tensor& a, const Tensor& bias);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);  // exact erf form
Tensor tanh_act(const Tensor& a);
Tensor sigmoid_act(const Tensor& a);

Tensor rowwise_softmax(const Tensor& a);
// Per-row layer normalization with affine transform; gamma/beta are 1 x C.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);

// Gathers rows of `table` by id; backward scatters into the table grad.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

Tensor slice_rows(const Tensor& x, Eigen::Index start, Eigen::Index n);
Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index n);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Column-wise max over rows -> 1 x C. Grad routes to the first maximal row.
Tensor colwise_max(const Tensor& x);
Tensor sum_all(const Tensor& x);  // 1 x 1

// Numerically fused -log softmax(logits)[target]; logits is 1 x K.
Tensor cross_entropy_with_logits(const Tensor& logits, int target);

}  // namespace fndet::nn
