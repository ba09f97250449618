#pragma once

// Central finite-difference oracle for gradient checks. Lives in test code
// and stays independent of the tape's backward implementation.

#include <cmath>
#include <functional>
#include <vector>

#include "osgda/matrix.hpp"

namespace osgda::test {

/// Evaluates a scalar loss as a function of a set of parameter matrices.
using LossFn = std::function<double(const std::vector<DenseMatrix>&)>;

/// d loss / d params[k](i,j) by central differences.
inline DenseMatrix fd_gradient(const LossFn& loss, std::vector<DenseMatrix> params,
                               std::size_t k, double step = 1e-5) {
  DenseMatrix grad(params[k].rows, params[k].cols);
  for (std::size_t i = 0; i < params[k].size(); ++i) {
    const double saved = params[k].data[i];
    params[k].data[i] = saved + step;
    const double up = loss(params);
    params[k].data[i] = saved - step;
    const double down = loss(params);
    params[k].data[i] = saved;
    grad.data[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Largest relative error between an analytic gradient and the oracle,
/// with an absolute floor so near-zero entries compare sanely.
inline double max_rel_error(const DenseMatrix& analytic, const DenseMatrix& numeric,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic.data[i]), std::fabs(numeric.data[i]), floor});
    worst = std::max(worst, std::fabs(analytic.data[i] - numeric.data[i]) / denom);
  }
  return worst;
}

}  // namespace osgda::test
