#include "mamba/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mamba::nn {

std::vector<Mat> finite_difference_grads(ParamSet& params,
                                         const std::function<double()>& loss_fn,
                                         double epsilon) {
  std::vector<Mat> grads;
  for (Param& p : params) {
    Mat g(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        double orig = p.value(i, j);
        p.value(i, j) = orig + epsilon;
        double plus = loss_fn();
        p.value(i, j) = orig - epsilon;
        double minus = loss_fn();
        p.value(i, j) = orig;
        g(i, j) = (plus - minus) / (2.0 * epsilon);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult check_grads(ParamSet& params, const std::function<double()>& loss_fn,
                            double epsilon, double floor) {
  std::vector<Mat> numeric = finite_difference_grads(params, loss_fn, epsilon);
  GradCheckResult result;
  size_t i = 0;
  for (Param& p : params) {
    const Mat& n = numeric[i++];
    double scale = std::max({p.grad.size() ? p.grad.cwiseAbs().maxCoeff() : 0.0,
                             n.cwiseAbs().maxCoeff(), floor});
    Mat a = p.grad.size() ? p.grad : Mat::Zero(n.rows(), n.cols());
    double err = (a - n).cwiseAbs().maxCoeff() / scale;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_param = p.name;
    }
  }
  return result;
}

}  // namespace mamba::nn
