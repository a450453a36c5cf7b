#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mamba/nn/params.hpp"

namespace mamba::nn {

// Central finite differences over every scalar of every parameter in `params`.
// `loss_fn` must rebuild the computation from scratch and return the loss
// value; it must be deterministic (reseed any RNG inside).
std::vector<Mat> finite_difference_grads(ParamSet& params,
                                         const std::function<double()>& loss_fn,
                                         double epsilon = 1e-5);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
};

// Compares the currently accumulated analytic gradients in `params` against a
// finite-difference estimate of `loss_fn`. Relative error per parameter is
// ||analytic - numeric||_inf / max(||analytic||_inf, ||numeric||_inf, floor).
GradCheckResult check_grads(ParamSet& params, const std::function<double()>& loss_fn,
                            double epsilon = 1e-5, double floor = 1e-6);

}  // namespace mamba::nn
