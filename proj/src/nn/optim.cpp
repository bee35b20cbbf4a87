#include "fndet/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace fndet::nn {

AdamW::AdamW(std::vector<NamedParam> params, AdamWOptions options)
    : params_(std::move(params)), opt_(options) {
  slots_.resize(params_.size());
}

void AdamW::step() {
  ++step_;
  double lr = opt_.lr;
  if (opt_.warmup_steps > 0 && step_ <= opt_.warmup_steps)
    lr = opt_.lr * static_cast<double>(step_) / static_cast<double>(opt_.warmup_steps);
  last_lr_ = lr;

  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.has_grad()) continue;
    const Matrix& g = p.grad();
    Slot& s = slots_[i];
    if (s.m.size() == 0) {
      s.m = Matrix::Zero(g.rows(), g.cols());
      s.v = Matrix::Zero(g.rows(), g.cols());
    }
    s.m = opt_.beta1 * s.m + (1.0 - opt_.beta1) * g;
    s.v = opt_.beta2 * s.v.array().matrix() + (1.0 - opt_.beta2) * g.cwiseProduct(g);

    Matrix update = (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + opt_.eps);
    if (params_[i].decay && opt_.weight_decay != 0.0)
      update.array() += opt_.weight_decay * p.value().array();
    p.mutable_value() -= lr * update;
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double clip_global_norm(std::vector<NamedParam>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    if (p.tensor.has_grad()) sq += p.tensor.grad().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& p : params)
      if (p.tensor.has_grad()) {
        // grad() is read-only by design; scale through the node.
        p.tensor.node()->grad *= factor;
      }
  }
  return norm;
}

}  // namespace fndet::nn
