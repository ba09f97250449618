#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "osgda/matrix.hpp"

namespace osgda {

/// Adaptive-moments optimizer with decoupled weight decay. Parameters are
/// registered once by shape; step() must then be called with matching
/// lists in the same order.
class Adam {
 public:
  Adam(double lr, double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<DenseMatrix*>& params, const std::vector<const DenseMatrix*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Adam: param/grad count mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->rows, p->cols);
        v_.emplace_back(p->rows, p->cols);
      }
    }
    if (m_.size() != params.size()) throw std::invalid_argument("Adam: parameter set changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      DenseMatrix& p = *params[k];
      const DenseMatrix& g = *grads[k];
      require_same_shape(p, g, "Adam::step");
      DenseMatrix& m = m_[k];
      DenseMatrix& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g.data[i];
        v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g.data[i] * g.data[i];
        const double mhat = m.data[i] / bc1;
        const double vhat = v.data[i] / bc2;
        p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        if (wd_ != 0.0) p.data[i] -= lr_ * wd_ * p.data[i];
      }
    }
  }

  long step_count() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<DenseMatrix> m_, v_;
};

}  // namespace osgda
