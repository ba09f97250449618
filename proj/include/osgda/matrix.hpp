#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace osgda {

/// Dense row-major matrix of doubles. The single numeric storage type used
/// for features, weights, activations and gradients.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("DenseMatrix: negative shape");
  }

  static DenseMatrix eye(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline bool all_finite(const DenseMatrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
}

/// out = a * b
inline void matmul(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions differ, " + shape_str(a) + " vs " +
                                shape_str(b));
  out = DenseMatrix(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* or_ = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ar[k];
      const double* br = b.row(k);
      for (int j = 0; j < b.cols; ++j) or_[j] += aik * br[j];
    }
  }
}

/// out += a * b^T
inline void matmul_nt_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.cols != b.cols || out.rows != a.rows || out.cols != b.rows)
    throw std::invalid_argument("matmul_nt_add: shape mismatch");
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* or_ = out.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* br = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ar[k] * br[k];
      or_[j] += s;
    }
  }
}

/// out += a^T * b
inline void matmul_tn_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  if (a.rows != b.rows || out.rows != a.cols || out.cols != b.cols)
    throw std::invalid_argument("matmul_tn_add: shape mismatch");
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    const double* br = b.row(i);
    for (int j = 0; j < a.cols; ++j) {
      const double aij = ar[j];
      double* or_ = out.row(j);
      for (int k = 0; k < b.cols; ++k) or_[k] += aij * br[k];
    }
  }
}

}  // namespace osgda
