#include "mamba/nn/adam.hpp"

#include <cmath>

namespace mamba::nn {

void AdamOptimizer::step(ParamSet& params) {
  if (slots_.empty()) {
    for (Param& p : params) {
      slots_.push_back({Mat::Zero(p.value.rows(), p.value.cols()),
                        Mat::Zero(p.value.rows(), p.value.cols())});
    }
  }
  for (Param& p : params) {
    if (!p.grad.allFinite()) {
      throw NnError("optimizer: non-finite gradient in parameter `" + p.name + "`");
    }
  }
  double norm = std::sqrt(params.grad_sq_norm());
  double scale = (clip_norm_ > 0 && norm > clip_norm_) ? clip_norm_ / norm : 1.0;

  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  size_t i = 0;
  for (Param& p : params) {
    Slot& s = slots_[i++];
    Mat g = p.grad * scale;
    s.m = beta1_ * s.m + (1.0 - beta1_) * g;
    s.v = beta2_ * s.v + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat m_hat = s.m / bc1;
    Mat v_hat = s.v / bc2;
    p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
    p.grad.setZero();
  }
}

}  // namespace mamba::nn
