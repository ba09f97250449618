#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "osgda/csr.hpp"
#include "osgda/matrix.hpp"

namespace osgda {

/// Handle to a node on a Tape.
struct NodeRef {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op {
  Leaf,
  MatMul,
  SpMM,
  Hadamard,
  Add,
  ScalarMul,
  LeakyRelu,
  Exp,
  LogSoftmaxRows,
  MaskedLogSoftmaxRows,
  ConcatCols,
  SliceCols,
  TakeRows,
  RowSum,
  RowLogSumExp,
  SumAll,
  MeanAll,
  GradReverse,
};

/// One recorded operation: its output value and the gradient of the loss
/// with respect to that output. Parents always have smaller ids, so the
/// record is topologically ordered by construction.
struct ValueNode {
  Op op = Op::Leaf;
  int p0 = -1;
  int p1 = -1;
  DenseMatrix value;
  DenseMatrix grad;
  double scalar = 0.0;             // ScalarMul factor, LeakyRelu slope, GradReverse scale
  const CsrAdjacency* adj = nullptr;  // SpMM only; not owned
  std::vector<int> idx;            // MaskedLogSoftmaxRows / SliceCols / TakeRows payload
};

/// Reverse-mode differentiation record over dense matrices. Single-owner:
/// build the forward, call backward(loss) once, read gradients by handle.
class Tape {
 public:
  const DenseMatrix& value(NodeRef r) const { return at(r).value; }
  const DenseMatrix& grad(NodeRef r) const { return at(r).grad; }
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }
  Op op_of(NodeRef r) const { return at(r).op; }

  NodeRef constant(DenseMatrix m) { return push(Op::Leaf, -1, -1, std::move(m)); }

  NodeRef matmul(NodeRef a, NodeRef b) {
    const auto& av = at(a).value;
    const auto& bv = at(b).value;
    DenseMatrix out;
    osgda::matmul(av, bv, out);
    return push(Op::MatMul, a.id, b.id, std::move(out));
  }

  /// y = A_hat * x with the cached symmetric normalization; backward uses
  /// A_hat^T = A_hat.
  NodeRef spmm(const CsrAdjacency& adj, NodeRef x) {
    if (!adj.has_normalization())
      throw std::logic_error("spmm: adjacency has no normalization coefficients");
    const auto& xv = at(x).value;
    if (adj.n != xv.rows)
      throw std::invalid_argument("spmm: adjacency n=" + std::to_string(adj.n) +
                                  " vs x rows=" + std::to_string(xv.rows));
    DenseMatrix out = spmm_value(adj, xv);
    NodeRef r = push(Op::SpMM, x.id, -1, std::move(out));
    nodes_[r.id].adj = &adj;
    return r;
  }

  NodeRef hadamard(NodeRef a, NodeRef b) {
    const auto& av = at(a).value;
    const auto& bv = at(b).value;
    require_same_shape(av, bv, "hadamard");
    DenseMatrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
    return push(Op::Hadamard, a.id, b.id, std::move(out));
  }

  NodeRef add(NodeRef a, NodeRef b) {
    const auto& av = at(a).value;
    const auto& bv = at(b).value;
    require_same_shape(av, bv, "add");
    DenseMatrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = av.data[i] + bv.data[i];
    return push(Op::Add, a.id, b.id, std::move(out));
  }

  NodeRef scalar_mul(NodeRef a, double c) {
    const auto& av = at(a).value;
    DenseMatrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = c * av.data[i];
    NodeRef r = push(Op::ScalarMul, a.id, -1, std::move(out));
    nodes_[r.id].scalar = c;
    return r;
  }

  NodeRef leaky_relu(NodeRef a, double slope) {
    const auto& av = at(a).value;
    require_nonempty(av, "leaky_relu");
    DenseMatrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double x = av.data[i];
      out.data[i] = x > 0.0 ? x : slope * x;
    }
    NodeRef r = push(Op::LeakyRelu, a.id, -1, std::move(out));
    nodes_[r.id].scalar = slope;
    return r;
  }

  NodeRef relu(NodeRef a) { return leaky_relu(a, 0.0); }

  NodeRef exp(NodeRef a) {
    const auto& av = at(a).value;
    require_nonempty(av, "exp");
    DenseMatrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::exp(av.data[i]);
    return push(Op::Exp, a.id, -1, std::move(out));
  }

  /// Row-wise log-softmax with max subtraction.
  NodeRef log_softmax_rows(NodeRef a) {
    const auto& av = at(a).value;
    if (av.rows < 1 || av.cols < 1) throw std::invalid_argument("log_softmax_rows: empty matrix");
    DenseMatrix out(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
      const double* x = av.row(i);
      double mx = x[0];
      for (int j = 1; j < av.cols; ++j) mx = std::max(mx, x[j]);
      double s = 0.0;
      for (int j = 0; j < av.cols; ++j) s += std::exp(x[j] - mx);
      const double lse = mx + std::log(s);
      for (int j = 0; j < av.cols; ++j) out(i, j) = x[j] - lse;
    }
    return push(Op::LogSoftmaxRows, a.id, -1, std::move(out));
  }

  /// Row-wise log-softmax over all columns except excluded[i] in row i.
  /// The excluded output entry is set to 0 and receives no gradient.
  NodeRef masked_log_softmax_rows(NodeRef a, std::vector<int> excluded) {
    const auto& av = at(a).value;
    if (static_cast<int>(excluded.size()) != av.rows)
      throw std::invalid_argument("masked_log_softmax_rows: one excluded column per row required");
    if (av.cols < 2) throw std::invalid_argument("masked_log_softmax_rows: need >= 2 columns");
    DenseMatrix out(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
      const int ex = excluded[i];
      if (ex < 0 || ex >= av.cols)
        throw std::out_of_range("masked_log_softmax_rows: excluded column out of range");
      const double* x = av.row(i);
      double mx = -1e300;
      for (int j = 0; j < av.cols; ++j)
        if (j != ex) mx = std::max(mx, x[j]);
      double s = 0.0;
      for (int j = 0; j < av.cols; ++j)
        if (j != ex) s += std::exp(x[j] - mx);
      const double lse = mx + std::log(s);
      for (int j = 0; j < av.cols; ++j) out(i, j) = (j == ex) ? 0.0 : x[j] - lse;
    }
    NodeRef r = push(Op::MaskedLogSoftmaxRows, a.id, -1, std::move(out));
    nodes_[r.id].idx = std::move(excluded);
    return r;
  }

  NodeRef concat_cols(NodeRef a, NodeRef b) {
    const auto& av = at(a).value;
    const auto& bv = at(b).value;
    if (av.rows != bv.rows)
      throw std::invalid_argument("concat_cols: row counts differ, " + shape_str(av) + " vs " +
                                  shape_str(bv));
    DenseMatrix out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
      for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j);
      for (int j = 0; j < bv.cols; ++j) out(i, av.cols + j) = bv(i, j);
    }
    return push(Op::ConcatCols, a.id, b.id, std::move(out));
  }

  /// Columns [begin, end).
  NodeRef slice_cols(NodeRef a, int begin, int end) {
    const auto& av = at(a).value;
    if (begin < 0 || end > av.cols || begin >= end)
      throw std::invalid_argument("slice_cols: bad range");
    DenseMatrix out(av.rows, end - begin);
    for (int i = 0; i < av.rows; ++i)
      for (int j = begin; j < end; ++j) out(i, j - begin) = av(i, j);
    NodeRef r = push(Op::SliceCols, a.id, -1, std::move(out));
    nodes_[r.id].idx = {begin, end};
    return r;
  }

  NodeRef take_rows(NodeRef a, std::vector<int> rows) {
    const auto& av = at(a).value;
    DenseMatrix out(static_cast<int>(rows.size()), av.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= av.rows) throw std::out_of_range("take_rows: row out of range");
      for (int j = 0; j < av.cols; ++j) out(static_cast<int>(i), j) = av(rows[i], j);
    }
    NodeRef r = push(Op::TakeRows, a.id, -1, std::move(out));
    nodes_[r.id].idx = std::move(rows);
    return r;
  }

  NodeRef row_sum(NodeRef a) {
    const auto& av = at(a).value;
    DenseMatrix out(av.rows, 1);
    for (int i = 0; i < av.rows; ++i) {
      double s = 0.0;
      for (int j = 0; j < av.cols; ++j) s += av(i, j);
      out(i, 0) = s;
    }
    return push(Op::RowSum, a.id, -1, std::move(out));
  }

  /// Row-wise log(sum(exp(x))) with max subtraction.
  NodeRef row_logsumexp(NodeRef a) {
    const auto& av = at(a).value;
    if (av.rows < 1 || av.cols < 1) throw std::invalid_argument("row_logsumexp: empty matrix");
    DenseMatrix out(av.rows, 1);
    for (int i = 0; i < av.rows; ++i) {
      const double* x = av.row(i);
      double mx = x[0];
      for (int j = 1; j < av.cols; ++j) mx = std::max(mx, x[j]);
      double s = 0.0;
      for (int j = 0; j < av.cols; ++j) s += std::exp(x[j] - mx);
      out(i, 0) = mx + std::log(s);
    }
    return push(Op::RowLogSumExp, a.id, -1, std::move(out));
  }

  NodeRef sum_all(NodeRef a) {
    const auto& av = at(a).value;
    double s = 0.0;
    for (double v : av.data) s += v;
    DenseMatrix out(1, 1);
    out(0, 0) = s;
    return push(Op::SumAll, a.id, -1, std::move(out));
  }

  NodeRef mean_all(NodeRef a) {
    const auto& av = at(a).value;
    if (av.size() == 0) throw std::invalid_argument("mean_all: empty matrix");
    double s = 0.0;
    for (double v : av.data) s += v;
    DenseMatrix out(1, 1);
    out(0, 0) = s / static_cast<double>(av.size());
    return push(Op::MeanAll, a.id, -1, std::move(out));
  }

  /// Identity forward; backward multiplies the incoming gradient by -scale.
  NodeRef grad_reverse(NodeRef a, double scale) {
    if (scale < 0.0) throw std::invalid_argument("grad_reverse: scale must be >= 0");
    NodeRef r = push(Op::GradReverse, a.id, -1, at(a).value);
    nodes_[r.id].scalar = scale;
    return r;
  }

  /// Reverse accumulation from a scalar loss. Nodes unreachable from the
  /// loss keep zero gradients.
  void backward(NodeRef loss) {
    const auto& lv = at(loss).value;
    if (lv.rows != 1 || lv.cols != 1)
      throw std::invalid_argument("backward: loss must be 1x1, got " + shape_str(lv));
    for (auto& n : nodes_) {
      n.grad = DenseMatrix(n.value.rows, n.value.cols);
    }
    std::vector<char> reach(nodes_.size(), 0);
    mark_reachable(loss.id, reach);
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (int id = loss.id; id >= 0; --id) {
      if (!reach[id]) continue;
      accumulate_parents(nodes_[id]);
    }
    backward_done_ = true;
  }

 private:
  NodeRef push(Op op, int p0, int p1, DenseMatrix value) {
    ValueNode n;
    n.op = op;
    n.p0 = p0;
    n.p1 = p1;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return NodeRef{static_cast<int>(nodes_.size()) - 1};
  }

  const ValueNode& at(NodeRef r) const {
    if (!r.valid() || r.id >= static_cast<int>(nodes_.size()))
      throw std::out_of_range("Tape: invalid node handle");
    return nodes_[r.id];
  }

  static void require_nonempty(const DenseMatrix& m, const char* op) {
    if (m.size() == 0) throw std::invalid_argument(std::string(op) + ": empty matrix");
  }

  static DenseMatrix spmm_value(const CsrAdjacency& adj, const DenseMatrix& x) {
    DenseMatrix out(x.rows, x.cols);
    for (int u = 0; u < adj.n; ++u) {
      double* or_ = out.row(u);
      for (int e = adj.row_ptr[u]; e < adj.row_ptr[u + 1]; ++e) {
        const double w = adj.norm_val[e];
        const double* xr = x.row(adj.col_idx[e]);
        for (int j = 0; j < x.cols; ++j) or_[j] += w * xr[j];
      }
    }
    return out;
  }

  void mark_reachable(int id, std::vector<char>& reach) const {
    std::vector<int> stack{id};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      if (cur < 0 || reach[cur]) continue;
      reach[cur] = 1;
      stack.push_back(nodes_[cur].p0);
      stack.push_back(nodes_[cur].p1);
    }
  }

  void accumulate_parents(const ValueNode& n) {
    const DenseMatrix& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        matmul_nt_add(g, nodes_[n.p1].value, nodes_[n.p0].grad);
        matmul_tn_add(nodes_[n.p0].value, g, nodes_[n.p1].grad);
        break;
      }
      case Op::SpMM: {
        DenseMatrix back = spmm_value(*n.adj, g);  // A_hat is symmetric
        DenseMatrix& pg = nodes_[n.p0].grad;
        for (std::size_t i = 0; i < pg.size(); ++i) pg.data[i] += back.data[i];
        break;
      }
      case Op::Hadamard: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        DenseMatrix& gb = nodes_[n.p1].grad;
        const DenseMatrix& av = nodes_[n.p0].value;
        const DenseMatrix& bv = nodes_[n.p1].value;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i] * bv.data[i];
          gb.data[i] += g.data[i] * av.data[i];
        }
        break;
      }
      case Op::Add: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        DenseMatrix& gb = nodes_[n.p1].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i];
          gb.data[i] += g.data[i];
        }
        break;
      }
      case Op::ScalarMul: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += n.scalar * g.data[i];
        break;
      }
      case Op::LeakyRelu: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        const DenseMatrix& av = nodes_[n.p0].value;
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.data[i] += g.data[i] * (av.data[i] > 0.0 ? 1.0 : n.scalar);
        break;
      }
      case Op::Exp: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.value.data[i];
        break;
      }
      case Op::LogSoftmaxRows: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (int i = 0; i < g.rows; ++i) {
          double gs = 0.0;
          for (int j = 0; j < g.cols; ++j) gs += g(i, j);
          for (int j = 0; j < g.cols; ++j)
            ga(i, j) += g(i, j) - std::exp(n.value(i, j)) * gs;
        }
        break;
      }
      case Op::MaskedLogSoftmaxRows: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (int i = 0; i < g.rows; ++i) {
          const int ex = n.idx[i];
          double gs = 0.0;
          for (int j = 0; j < g.cols; ++j)
            if (j != ex) gs += g(i, j);
          for (int j = 0; j < g.cols; ++j)
            if (j != ex) ga(i, j) += g(i, j) - std::exp(n.value(i, j)) * gs;
        }
        break;
      }
      case Op::ConcatCols: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        DenseMatrix& gb = nodes_[n.p1].grad;
        for (int i = 0; i < g.rows; ++i) {
          for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(i, j);
          for (int j = 0; j < gb.cols; ++j) gb(i, j) += g(i, ga.cols + j);
        }
        break;
      }
      case Op::SliceCols: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        const int begin = n.idx[0];
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) ga(i, begin + j) += g(i, j);
        break;
      }
      case Op::TakeRows: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) ga(n.idx[i], j) += g(i, j);
        break;
      }
      case Op::RowSum: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (int i = 0; i < ga.rows; ++i)
          for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(i, 0);
        break;
      }
      case Op::RowLogSumExp: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        const DenseMatrix& av = nodes_[n.p0].value;
        for (int i = 0; i < ga.rows; ++i)
          for (int j = 0; j < ga.cols; ++j)
            ga(i, j) += g(i, 0) * std::exp(av(i, j) - n.value(i, 0));
        break;
      }
      case Op::SumAll: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        const double gv = g(0, 0);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += gv;
        break;
      }
      case Op::MeanAll: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        const double gv = g(0, 0) / static_cast<double>(ga.size());
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += gv;
        break;
      }
      case Op::GradReverse: {
        DenseMatrix& ga = nodes_[n.p0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += -n.scalar * g.data[i];
        break;
      }
    }
  }

  std::vector<ValueNode> nodes_;
  bool backward_done_ = false;
};

}  // namespace osgda
