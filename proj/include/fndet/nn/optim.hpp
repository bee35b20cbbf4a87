#pragma once

#include <cstdint>
#include <vector>

#include "fndet/nn/tensor.hpp"

namespace fndet::nn {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Learning rate ramps linearly from 0 to lr over the first warmup_steps
  // updates, then stays constant. 0 disables warmup.
  std::int64_t warmup_steps = 0;
};

// Adam with decoupled weight decay. Parameters whose grad was never touched
// in the current step are skipped entirely (no moment update, no decay),
// mirroring the usual skip-if-grad-is-none optimizer behavior.
class AdamW {
 public:
  AdamW(std::vector<NamedParam> params, AdamWOptions options);

  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  double last_lr() const { return last_lr_; }

 private:
  struct Slot {
    Matrix m;
    Matrix v;
  };
  std::vector<NamedParam> params_;
  std::vector<Slot> slots_;
  AdamWOptions opt_;
  std::int64_t step_ = 0;
  double last_lr_ = 0.0;
};

// Scales gradients so their global L2 norm does not exceed max_norm.
// Returns the pre-clip norm. Parameters without grads are ignored.
double clip_global_norm(std::vector<NamedParam>& params, double max_norm);

}  // namespace fndet::nn
