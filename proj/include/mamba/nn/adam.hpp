#pragma once

#include <vector>

#include "mamba/nn/params.hpp"

namespace mamba::nn {

// Adaptive-moment optimizer with global-norm gradient clipping. step()
// consumes and zeroes the accumulated gradients.
class AdamOptimizer {
public:
  explicit AdamOptimizer(double lr, double clip_norm = 100.0, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), clip_norm_(clip_norm), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet& params);

  long long step_count() const { return t_; }
  double lr() const { return lr_; }

private:
  struct Slot {
    Mat m, v;
  };

  double lr_, clip_norm_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace mamba::nn
