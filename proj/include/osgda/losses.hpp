#pragma once

#include <stdexcept>
#include <vector>

#include "osgda/entropy_mixture.hpp"
#include "osgda/matrix.hpp"
#include "osgda/tape.hpp"

namespace osgda {

/// Mean over rows of -sum_k targets[r,k] * log_probs[r,k]; targets enter
/// as a constant, so gradients flow only through the predictions.
inline NodeRef cross_entropy_soft(Tape& tape, NodeRef log_probs, const DenseMatrix& targets) {
  require_same_shape(tape.value(log_probs), targets, "cross_entropy_soft");
  NodeRef y = tape.constant(targets);
  return tape.scalar_mul(tape.mean_all(tape.row_sum(tape.hadamard(y, log_probs))), -1.0);
}

/// Three-way domain adversarial loss: soft label [1,0,0] for source rows,
/// [0, p(tk|e), p(tu|e)] for target rows, averaged over all n_s + n_t
/// rows. The gradient reaches the extractor through the reversal node
/// inside the discriminator forward.
inline NodeRef adv_loss(Tape& tape, NodeRef disc_logits_src, NodeRef disc_logits_tgt,
                        const std::vector<std::pair<double, double>>& posteriors) {
  const int n_s = tape.value(disc_logits_src).rows;
  const int n_t = tape.value(disc_logits_tgt).rows;
  if (static_cast<int>(posteriors.size()) != n_t)
    throw std::invalid_argument("adv_loss: posterior count differs from target rows");

  DenseMatrix y_src(n_s, 3);
  for (int i = 0; i < n_s; ++i) y_src(i, 0) = 1.0;
  DenseMatrix y_tgt(n_t, 3);
  for (int i = 0; i < n_t; ++i) {
    y_tgt(i, 1) = posteriors[i].first;
    y_tgt(i, 2) = posteriors[i].second;
  }
  NodeRef ce_src = cross_entropy_soft(tape, tape.log_softmax_rows(disc_logits_src), y_src);
  NodeRef ce_tgt = cross_entropy_soft(tape, tape.log_softmax_rows(disc_logits_tgt), y_tgt);
  const double total = n_s + n_t;
  return tape.add(tape.scalar_mul(ce_src, n_s / total), tape.scalar_mul(ce_tgt, n_t / total));
}

/// Source classification loss. Term 1 is cross-entropy of the
/// (|C_s|+1)-way softmax against the true label. Term 2 removes the
/// true-label logit, takes softmax over the remaining columns and targets
/// the unknown class; weighted by lambda.
inline NodeRef cls_loss(Tape& tape, NodeRef logits, const std::vector<int>& labels,
                        double lambda) {
  const DenseMatrix& lv = tape.value(logits);
  if (static_cast<int>(labels.size()) != lv.rows)
    throw std::invalid_argument("cls_loss: label count differs from logit rows");
  const int unknown_id = lv.cols - 1;
  DenseMatrix y1(lv.rows, lv.cols);
  DenseMatrix y2(lv.rows, lv.cols);
  for (int i = 0; i < lv.rows; ++i) {
    if (labels[i] < 0 || labels[i] >= unknown_id)
      throw std::invalid_argument("cls_loss: source label " + std::to_string(labels[i]) +
                                  " must be a known class");
    y1(i, labels[i]) = 1.0;
    y2(i, unknown_id) = 1.0;
  }
  NodeRef term1 = cross_entropy_soft(tape, tape.log_softmax_rows(logits), y1);
  if (lambda == 0.0) return term1;
  NodeRef masked = tape.masked_log_softmax_rows(logits, labels);
  NodeRef term2 = cross_entropy_soft(tape, masked, y2);
  return tape.add(term1, tape.scalar_mul(term2, lambda));
}

/// Known-head-only cross-entropy (threshold variant).
inline NodeRef cls_loss_known_only(Tape& tape, NodeRef known_logits,
                                   const std::vector<int>& labels) {
  const DenseMatrix& lv = tape.value(known_logits);
  DenseMatrix y(lv.rows, lv.cols);
  for (int i = 0; i < lv.rows; ++i) {
    if (labels[i] < 0 || labels[i] >= lv.cols)
      throw std::invalid_argument("cls_loss_known_only: bad label");
    y(i, labels[i]) = 1.0;
  }
  return cross_entropy_soft(tape, tape.log_softmax_rows(known_logits), y);
}

/// Mean Shannon entropy of a row softmax: -mean_r sum_k p log p.
inline NodeRef softmax_entropy_mean(Tape& tape, NodeRef logits) {
  NodeRef ls = tape.log_softmax_rows(logits);
  NodeRef p = tape.exp(ls);
  return tape.scalar_mul(tape.mean_all(tape.row_sum(tape.hadamard(p, ls))), -1.0);
}

/// How the entropy loss ties a per-node unknown belief to the mixture
/// posterior p(tu|e).
enum class EntPosteriorMode {
  Classifier,    // BCE between the classifier's unknown softmax mass and p(tu|e)
  DiscBinary,    // BCE against discriminator columns 1..2 renormalized
  DiscThreeWay,  // 3-way CE against [0, p(tk|e), p(tu|e)]
};

/// Target entropy loss. Term 1 is the mean prediction entropy over the
/// full class set. Term 2 supervises an unknown-vs-known belief with the
/// mixture posterior; in the default Classifier mode that belief is the
/// classifier's own unknown probability, which is what lets high-entropy
/// nodes migrate to the unknown class without a hand-set threshold.
inline NodeRef ent_loss(Tape& tape, NodeRef class_logits, NodeRef disc_logits_tgt,
                        const std::vector<std::pair<double, double>>& posteriors,
                        EntPosteriorMode mode = EntPosteriorMode::Classifier) {
  const int n_t = tape.value(class_logits).rows;
  if (static_cast<int>(posteriors.size()) != n_t)
    throw std::invalid_argument("ent_loss: posterior count differs from target rows");
  NodeRef term1 = softmax_entropy_mean(tape, class_logits);
  NodeRef term2;
  if (mode == EntPosteriorMode::Classifier) {
    const int cols = tape.value(class_logits).cols;
    if (cols < 2) throw std::invalid_argument("ent_loss: classifier mode needs an unknown column");
    // softmax([lse(known logits), unknown logit]) = [1 - p_unknown, p_unknown].
    // Rows are weighted by |2 p_tu - 1|: a posterior sitting at 1/2 carries
    // no group information and must not drag nodes toward either side.
    NodeRef lse_known = tape.row_logsumexp(tape.slice_cols(class_logits, 0, cols - 1));
    NodeRef two = tape.concat_cols(lse_known, tape.slice_cols(class_logits, cols - 1, cols));
    DenseMatrix y(n_t, 2);
    for (int i = 0; i < n_t; ++i) {
      const double w = std::fabs(2.0 * posteriors[i].second - 1.0);
      y(i, 0) = w * posteriors[i].first;
      y(i, 1) = w * posteriors[i].second;
    }
    term2 = cross_entropy_soft(tape, tape.log_softmax_rows(two), y);
  } else if (mode == EntPosteriorMode::DiscThreeWay) {
    DenseMatrix y(n_t, 3);
    for (int i = 0; i < n_t; ++i) {
      y(i, 1) = posteriors[i].first;
      y(i, 2) = posteriors[i].second;
    }
    term2 = cross_entropy_soft(tape, tape.log_softmax_rows(disc_logits_tgt), y);
  } else {
    NodeRef pair_logits = tape.slice_cols(disc_logits_tgt, 1, 3);
    DenseMatrix y(n_t, 2);
    for (int i = 0; i < n_t; ++i) {
      y(i, 0) = posteriors[i].first;
      y(i, 1) = posteriors[i].second;
    }
    term2 = cross_entropy_soft(tape, tape.log_softmax_rows(pair_logits), y);
  }
  return tape.add(term1, term2);
}

}  // namespace osgda
