#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fndet/nn/rng.hpp"
#include "fndet/nn/tensor.hpp"

namespace testutil {

using fndet::nn::Matrix;
using fndet::nn::Tensor;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, fndet::nn::Rng& rng,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal() * scale;
  return m;
}

// Central finite difference of a scalar function at every entry of `param`,
// compared against the analytic grad already stored on the tensor.
// Returns the worst relative error seen.
inline double max_grad_error(Tensor& param, const std::function<double()>& loss_fn,
                             double h = 1e-5) {
  double worst = 0.0;
  const Matrix analytic = param.grad();
  Matrix& v = param.mutable_value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      const double keep = v(r, c);
      v(r, c) = keep + h;
      const double up = loss_fn();
      v(r, c) = keep - h;
      const double down = loss_fn();
      v(r, c) = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic(r, c);
      const double err = std::abs(a - numeric) / std::max({1e-6, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace testutil
