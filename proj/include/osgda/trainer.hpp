#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "osgda/adam.hpp"
#include "osgda/entropy_mixture.hpp"
#include "osgda/graph_data.hpp"
#include "osgda/graph_edit.hpp"
#include "osgda/losses.hpp"
#include "osgda/mask.hpp"
#include "osgda/metrics.hpp"
#include "osgda/model.hpp"
#include "osgda/rng.hpp"
#include "osgda/tape.hpp"

namespace osgda {

enum class Variant { Full, Threshold, NoMr, NoGr, NoAdapt };

inline Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "threshold") return Variant::Threshold;
  if (s == "no_mr") return Variant::NoMr;
  if (s == "no_gr") return Variant::NoGr;
  if (s == "no_adapt") return Variant::NoAdapt;
  throw std::invalid_argument("unknown variant: " + s);
}

inline std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Threshold: return "threshold";
    case Variant::NoMr: return "no_mr";
    case Variant::NoGr: return "no_gr";
    case Variant::NoAdapt: return "no_adapt";
  }
  return "full";
}

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  double lambda = 0.01;       // weight of the second classification term
  double rho = 0.1;           // mask sparsity fraction
  double budget_ratio = 0.05; // edge-edit budget as a fraction of target edges
  int budget_abs = -1;        // absolute budget; overrides the ratio when >= 0
  int epochs = 100;
  int em_iters = 20;
  std::uint64_t seed = 1;
  double grl_scale = 1.0;
  bool grl_warmup = false;    // linear 0 -> grl_scale over the first quarter of epochs
  int warmup_epochs = -1;     // source-only epochs before adaptation; -1 = epochs / 5
  Variant variant = Variant::Full;
  double tau = 0.5;           // threshold variant: normalized-entropy cutoff
  std::vector<int> hidden_dims = {64, 32};
  int disc_hidden = 16;
  Activation activation = Activation::Relu;
  double leaky_slope = 0.01;
  int candidate_multiplier = 5;  // non-edge pool size = multiplier x edge count
  int flip_cap_divisor = 50;     // per-epoch flip cap = max(1, B / divisor)
  EntPosteriorMode ent_posterior_mode = EntPosteriorMode::Classifier;
  bool adv_enabled = true;
  bool ent_enabled = true;
  bool freeze_delta = false;

  /// Collapses the ablation variants onto the equivalent flag settings so
  /// that the rest of the pipeline only distinguishes full vs threshold.
  TrainConfig resolved() const {
    TrainConfig c = *this;
    switch (variant) {
      case Variant::Full:
      case Variant::Threshold:
        break;
      case Variant::NoMr:
        c.rho = 0.0;
        c.variant = Variant::Full;
        break;
      case Variant::NoGr:
        c.budget_ratio = 0.0;
        c.budget_abs = 0;
        c.freeze_delta = true;
        c.variant = Variant::Full;
        break;
      case Variant::NoAdapt:
        c.lambda = 0.0;
        c.rho = 0.0;
        c.budget_ratio = 0.0;
        c.budget_abs = 0;
        c.freeze_delta = true;
        c.adv_enabled = false;
        c.ent_enabled = false;
        c.variant = Variant::Full;
        break;
    }
    return c;
  }

  void validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho must lie in [0, 1]");
    if (budget_ratio < 0.0) throw std::invalid_argument("budget_ratio must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (em_iters < 1) throw std::invalid_argument("em_iters must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("tau must lie in (0, 1)");
    if (hidden_dims.empty()) throw std::invalid_argument("hidden_dims must be nonempty");
    if (candidate_multiplier < 1) throw std::invalid_argument("candidate_multiplier must be >= 1");
    if (flip_cap_divisor < 1) throw std::invalid_argument("flip_cap_divisor must be >= 1");
  }
};

struct LossBreakdown {
  double adv = 0.0, cls = 0.0, ent = 0.0, total = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  std::string phase = "graph";  // the phase that closed the epoch
  LossBreakdown losses;
  double acc_val = 0.0;
  double h_val = 0.0;
  double alpha_tk = 0.0, beta_tk = 0.0, alpha_tu = 0.0, beta_tu = 0.0, mix_tk = 0.0;
  int flips_committed = 0;  // this epoch
  double mask_zero_frac = 0.0;
};

inline nlohmann::ordered_json metrics_to_json(const EpochMetrics& m) {
  return nlohmann::ordered_json{{"epoch", m.epoch},
                                {"phase", m.phase},
                                {"adv", m.losses.adv},
                                {"cls", m.losses.cls},
                                {"ent", m.losses.ent},
                                {"total", m.losses.total},
                                {"acc_val", m.acc_val},
                                {"h_val", m.h_val},
                                {"alpha_tk", m.alpha_tk},
                                {"beta_tk", m.beta_tk},
                                {"alpha_tu", m.alpha_tu},
                                {"beta_tu", m.beta_tu},
                                {"mix_tk", m.mix_tk},
                                {"flips_committed", m.flips_committed},
                                {"mask_zero_frac", m.mask_zero_frac}};
}

// ---------------------------------------------------------------------------
// Value-only inference
// ---------------------------------------------------------------------------

struct Inference {
  DenseMatrix embeddings;
  DenseMatrix logits;  // |C_s|+1 columns, or |C_s| in threshold mode
};

inline Inference infer(const Model& model, const CsrAdjacency& adj, const DenseMatrix& features,
                       bool threshold_mode) {
  Tape tape;
  LayerNodes layers = make_layer_nodes(tape, model.extractor);
  NodeRef z = forward_extractor_with(tape, adj, tape.constant(features), model.extractor, layers);
  HeadNodes heads = make_classifier_nodes(tape, model.classifier, !threshold_mode);
  NodeRef logits = classify_with(tape, z, heads);
  return {tape.value(z), tape.value(logits)};
}

inline DenseMatrix add_delta(const DenseMatrix& features, const DenseMatrix& delta) {
  require_same_shape(features, delta, "add_delta");
  DenseMatrix out = features;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += delta.data[i];
  return out;
}

/// Full mode: argmax over |C_s|+1 logits. Threshold mode: argmax over the
/// known classes, overridden to unknown when the normalized prediction
/// entropy exceeds tau.
inline std::vector<int> predict_from_logits(const DenseMatrix& logits, bool threshold_mode,
                                            double tau, int known_count) {
  std::vector<int> pred(logits.rows);
  if (!threshold_mode) {
    for (int i = 0; i < logits.rows; ++i) {
      int best = 0;
      for (int j = 1; j < logits.cols; ++j)
        if (logits(i, j) > logits(i, best)) best = j;
      pred[i] = best;
    }
    return pred;
  }
  const EntropyProfile profile = compute_entropy(logits);
  for (int i = 0; i < logits.rows; ++i) {
    if (profile.normalized[i] > tau) {
      pred[i] = known_count;
      continue;
    }
    int best = 0;
    for (int j = 1; j < logits.cols; ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    pred[i] = best;
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainResult {
  Model model;                    // end-of-run state
  DenseMatrix delta;
  CsrAdjacency target_adj;
  std::vector<EdgeFlip> flips;    // committed, in order
  Model best_model;               // best-validation snapshot
  DenseMatrix best_delta;
  CsrAdjacency best_target_adj;
  std::vector<EdgeFlip> best_flips;
  int best_epoch = 0;
  EvalReport report;              // evaluated on the best snapshot
  std::vector<EpochMetrics> metrics;
  DenseMatrix embeddings_epoch0;
  DenseMatrix embeddings_final;
  BetaMixture mixture;
};

namespace detail {

struct LossGraph {
  LayerNodes layers;
  ExtractorTaps taps_tgt;
  NodeRef delta;
  NodeRef logits_src;
  NodeRef logits_tgt;
  NodeRef adv, cls, ent, total;
  HeadNodes heads;
  DiscNodes disc;
  bool has_disc = false;
};

/// Builds the full forward and Eq.-style loss sum on one tape. Parameter
/// nodes are shared between the source and target passes so their
/// gradients accumulate across domains.
inline LossGraph build_losses(Tape& tape, const DomainPair& pair, const CsrAdjacency& adj_t,
                              const Model& model, const DenseMatrix& delta,
                              const std::vector<int>& train_rows,
                              const std::vector<int>& train_labels,
                              const std::vector<std::pair<double, double>>& posteriors,
                              const TrainConfig& cfg, double grl_scale_epoch, bool unit_masks,
                              bool ent_posterior_term = true) {
  LossGraph g;
  const bool threshold_mode = cfg.variant == Variant::Threshold;
  g.layers = make_layer_nodes(tape, model.extractor, true, unit_masks);
  NodeRef z_src = forward_extractor_with(tape, pair.source.adjacency,
                                         tape.constant(pair.source.features), model.extractor,
                                         g.layers);
  g.delta = tape.constant(delta);
  NodeRef x_tgt = apply_feature_delta(tape, tape.constant(pair.target.features), g.delta);
  NodeRef z_tgt =
      forward_extractor_with(tape, adj_t, x_tgt, model.extractor, g.layers, &g.taps_tgt);

  g.heads = make_classifier_nodes(tape, model.classifier, !threshold_mode);
  g.logits_src = classify_with(tape, z_src, g.heads);
  g.logits_tgt = classify_with(tape, z_tgt, g.heads);

  NodeRef train_logits = tape.take_rows(g.logits_src, train_rows);
  g.cls = threshold_mode ? cls_loss_known_only(tape, train_logits, train_labels)
                         : cls_loss(tape, train_logits, train_labels, cfg.lambda);
  g.total = g.cls;

  // The threshold variant has no unknown column, so its posterior term
  // falls back to the discriminator's known/unknown split.
  EntPosteriorMode ent_mode = cfg.ent_posterior_mode;
  if (threshold_mode && ent_mode == EntPosteriorMode::Classifier)
    ent_mode = EntPosteriorMode::DiscBinary;
  const bool need_disc = cfg.adv_enabled || (cfg.ent_enabled && ent_posterior_term &&
                                             ent_mode != EntPosteriorMode::Classifier);

  if (need_disc) {
    g.disc = make_discriminator_nodes(tape, model.discriminator);
    g.has_disc = true;
  }
  if (cfg.adv_enabled) {
    NodeRef d_src = discriminate_with(tape, z_src, g.disc, model.extractor.activation,
                                      model.extractor.leaky_slope, grl_scale_epoch);
    NodeRef d_tgt = discriminate_with(tape, z_tgt, g.disc, model.extractor.activation,
                                      model.extractor.leaky_slope, grl_scale_epoch);
    g.adv = adv_loss(tape, d_src, d_tgt, posteriors);
    g.total = tape.add(g.total, g.adv);
  }
  if (cfg.ent_enabled) {
    if (ent_posterior_term) {
      NodeRef d_tgt_ent;
      if (ent_mode != EntPosteriorMode::Classifier) {
        // The reversal belongs to the adversarial game only; the posterior
        // term is cooperative.
        d_tgt_ent = discriminate_with(tape, z_tgt, g.disc, model.extractor.activation,
                                      model.extractor.leaky_slope, grl_scale_epoch,
                                      /*with_grl=*/false);
      }
      g.ent = ent_loss(tape, g.logits_tgt, d_tgt_ent, posteriors, ent_mode);
    } else {
      g.ent = softmax_entropy_mean(tape, g.logits_tgt);
    }
    g.total = tape.add(g.total, g.ent);
  }
  return g;
}

inline LossBreakdown read_breakdown(const Tape& tape, const LossGraph& g) {
  LossBreakdown b;
  b.cls = tape.value(g.cls)(0, 0);
  if (g.adv.valid()) b.adv = tape.value(g.adv)(0, 0);
  if (g.ent.valid()) b.ent = tape.value(g.ent)(0, 0);
  b.total = tape.value(g.total)(0, 0);
  return b;
}

inline void check_finite(const LossBreakdown& b, int epoch) {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(b.adv))
    throw std::runtime_error("non-finite adversarial loss at epoch " + std::to_string(epoch));
  if (bad(b.cls))
    throw std::runtime_error("non-finite classification loss at epoch " + std::to_string(epoch));
  if (bad(b.ent))
    throw std::runtime_error("non-finite entropy loss at epoch " + std::to_string(epoch));
  if (bad(b.total))
    throw std::runtime_error("non-finite total loss at epoch " + std::to_string(epoch));
}

inline double subset_accuracy(const std::vector<int>& pred, const std::vector<int>& labels,
                              const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  int ok = 0;
  for (int r : rows)
    if (pred[r] == labels[r]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

}  // namespace detail

/// Alternating two-phase training: per epoch, (a) score importance with
/// unit masks, rebuild and apply the sparsity masks, take one optimizer
/// step on the model under the frozen graph; (b) freeze the model, refit
/// the Beta mixture on current entropies, update the feature delta and
/// commit up to the per-epoch cap of budgeted edge flips.
inline TrainResult run_training(const DomainPair& pair, const TrainConfig& config,
                                std::ostream* metrics_out = nullptr,
                                std::ostream* edit_log = nullptr) {
  TrainConfig cfg = config.resolved();
  cfg.validate();
  const bool threshold_mode = cfg.variant == Variant::Threshold;
  const bool mixture_on = cfg.adv_enabled || cfg.ent_enabled;
  const int known_count = pair.known_count;
  const int n_t = pair.target.node_count();

  ModelDims dims;
  dims.feature_dim = pair.source.feature_dim();
  dims.hidden = cfg.hidden_dims;
  dims.known_count = known_count;
  dims.disc_hidden = cfg.disc_hidden;

  TrainResult res;
  res.model = init_params(dims, cfg.activation, cfg.leaky_slope, cfg.grl_scale, cfg.seed);
  res.delta = DenseMatrix(n_t, pair.target.feature_dim());
  res.target_adj = pair.target.adjacency;

  const SplitIndices split = split_source(pair.source, known_count, cfg.seed);
  if (split.train.empty()) throw std::runtime_error("run_training: empty training split");
  std::vector<int> train_labels;
  train_labels.reserve(split.train.size());
  for (int r : split.train) train_labels.push_back(pair.source.labels[r]);

  const int base_edges = pair.target.adjacency.undirected_edge_count();
  const int budget = cfg.budget_abs >= 0
                         ? cfg.budget_abs
                         : static_cast<int>(std::floor(cfg.budget_ratio * base_edges));
  int remaining_budget = budget;

  std::vector<std::pair<double, double>> posteriors(n_t, {0.5, 0.5});
  RngStream sampling_rng(cfg.seed, "sampling");

  Adam adam_model(cfg.learning_rate, cfg.weight_decay);
  Adam adam_delta(cfg.learning_rate, 0.0);

  const int warmup = cfg.warmup_epochs < 0 ? cfg.epochs / 5 : cfg.warmup_epochs;
  EntPosteriorMode ent_mode_resolved = cfg.ent_posterior_mode;
  if (threshold_mode && ent_mode_resolved == EntPosteriorMode::Classifier)
    ent_mode_resolved = EntPosteriorMode::DiscBinary;
  const bool disc_in_params =
      cfg.adv_enabled || (cfg.ent_enabled && ent_mode_resolved != EntPosteriorMode::Classifier);
  const DenseMatrix zero_w1(res.model.discriminator.w1.rows, res.model.discriminator.w1.cols);
  const DenseMatrix zero_w2(res.model.discriminator.w2.rows, res.model.discriminator.w2.cols);

  res.embeddings_epoch0 =
      infer(res.model, res.target_adj, add_delta(pair.target.features, res.delta), threshold_mode)
          .embeddings;

  double best_h_val = -1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // During warm-up only the source supervision runs; adaptation starts
    // once the classifier has a usable entropy profile.
    TrainConfig ecfg = cfg;
    const bool in_warmup = epoch < warmup;
    if (in_warmup) {
      ecfg.adv_enabled = false;
      ecfg.ent_enabled = false;
    }
    double grl_scale_epoch = cfg.grl_scale;
    if (cfg.grl_warmup) {
      const int ramp = std::max(1, (cfg.epochs - warmup) / 4);
      grl_scale_epoch =
          cfg.grl_scale * std::min(1.0, static_cast<double>(std::max(0, epoch - warmup)) / ramp);
    }

    // -- model phase: reprogram masks, then one step on the model --------
    if (cfg.rho > 0.0) {
      Tape tape;
      auto g = detail::build_losses(tape, pair, res.target_adj, res.model, res.delta, split.train,
                                    train_labels, posteriors, ecfg, grl_scale_epoch, true);
      tape.backward(g.total);
      apply_masks(res.model, build_masks(score_importance(tape, g.layers.masks), cfg.rho));
    }

    LossBreakdown breakdown;
    {
      Tape tape;
      auto g = detail::build_losses(tape, pair, res.target_adj, res.model, res.delta, split.train,
                                    train_labels, posteriors, ecfg, grl_scale_epoch, false);
      tape.backward(g.total);
      breakdown = detail::read_breakdown(tape, g);
      detail::check_finite(breakdown, epoch);

      std::vector<DenseMatrix*> params;
      std::vector<const DenseMatrix*> grads;
      for (std::size_t l = 0; l < res.model.extractor.layers.size(); ++l) {
        params.push_back(&res.model.extractor.layers[l].weight);
        grads.push_back(&tape.grad(g.layers.weights[l]));
      }
      params.push_back(&res.model.classifier.known_head);
      grads.push_back(&tape.grad(g.heads.known_head));
      if (!threshold_mode) {
        params.push_back(&res.model.classifier.unknown_head);
        grads.push_back(&tape.grad(g.heads.unknown_head));
      }
      if (disc_in_params) {
        params.push_back(&res.model.discriminator.w1);
        grads.push_back(g.has_disc ? &tape.grad(g.disc.w1) : &zero_w1);
        params.push_back(&res.model.discriminator.w2);
        grads.push_back(g.has_disc ? &tape.grad(g.disc.w2) : &zero_w2);
      }
      adam_model.step(params, grads);
    }

    // -- graph phase: refit mixture, update delta, commit flips ----------
    std::optional<Inference> target_inf;
    if (mixture_on) {
      target_inf = infer(res.model, res.target_adj, add_delta(pair.target.features, res.delta),
                         threshold_mode);
      DenseMatrix known_logits = target_inf->logits;
      if (!threshold_mode) {
        DenseMatrix k(known_logits.rows, known_count);
        for (int i = 0; i < k.rows; ++i)
          for (int j = 0; j < known_count; ++j) k(i, j) = known_logits(i, j);
        known_logits = std::move(k);
      }
      const EntropyProfile profile = compute_entropy(known_logits);
      res.mixture = fit_beta_mixture_em(profile, cfg.em_iters);
      for (int i = 0; i < n_t; ++i)
        posteriors[i] = posterior_known(res.mixture, profile.normalized[i]);
    }

    int flips_this_epoch = 0;
    if (!in_warmup && (!cfg.freeze_delta || remaining_budget > 0)) {
      Tape tape;
      auto g = detail::build_losses(tape, pair, res.target_adj, res.model, res.delta, split.train,
                                    train_labels, posteriors, ecfg, grl_scale_epoch, false);
      tape.backward(g.total);
      if (!cfg.freeze_delta) adam_delta.step({&res.delta}, {&tape.grad(g.delta)});
      if (remaining_budget > 0) {
        const int edge_count = res.target_adj.undirected_edge_count();
        CandidatePool pool = build_candidate_pool(
            res.target_adj, cfg.candidate_multiplier * std::max(edge_count, 1), sampling_rng);
        if (!pool.empty()) {
          auto taps = collect_spmm_taps(tape, res.target_adj, g.taps_tgt.prop_out,
                                        g.taps_tgt.prop_in);
          std::vector<EdgeFlip> scored = score_edge_flips(pool, taps, res.target_adj);
          std::sort(scored.begin(), scored.end(), [](const EdgeFlip& a, const EdgeFlip& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.u != b.u) return a.u < b.u;
            return a.v < b.v;
          });
          const int cap = std::max(1, budget / cfg.flip_cap_divisor);
          const int take = std::min(remaining_budget, cap);
          std::vector<EdgeFlip> selected;
          for (const auto& f : scored) {
            if (static_cast<int>(selected.size()) >= take) break;
            if (f.score <= 0.0) break;
            selected.push_back(f);
          }
          if (!selected.empty()) {
            res.target_adj = commit_flips(res.target_adj, selected, remaining_budget);
            remaining_budget -= static_cast<int>(selected.size());
            flips_this_epoch = static_cast<int>(selected.size());
            for (const auto& f : selected) {
              res.flips.push_back(f);
              if (edit_log) append_edit_log(*edit_log, epoch, f);
            }
          }
        }
      }
    }

    // -- epoch metrics ----------------------------------------------------
    const Inference src_inf = infer(res.model, pair.source.adjacency, pair.source.features,
                                    threshold_mode);
    const std::vector<int> src_pred =
        predict_from_logits(src_inf.logits, threshold_mode, cfg.tau, known_count);
    const double acc_val = detail::subset_accuracy(src_pred, pair.source.labels, split.valid);
    const double sanity_acc = detail::subset_accuracy(src_pred, pair.source.labels, split.sanity);

    double h_val = sanity_acc;
    if (mixture_on && target_inf) {
      // Open-set proxy: how much posterior mass backs each side of the
      // model's own known/unknown split. Degenerate epochs (reject
      // nothing, reject everything, posteriors at 1/2) all score low.
      const std::vector<int> tgt_pred =
          predict_from_logits(target_inf->logits, threshold_mode, cfg.tau, known_count);
      double known_mass = 0.0, unknown_mass = 0.0;
      int known_n = 0, unknown_n = 0;
      for (int i = 0; i < n_t; ++i) {
        if (tgt_pred[i] == known_count) {
          unknown_mass += posteriors[i].second;
          ++unknown_n;
        } else {
          known_mass += posteriors[i].first;
          ++known_n;
        }
      }
      const double purity_known = known_n ? known_mass / known_n : 0.0;
      const double purity_unknown = unknown_n ? unknown_mass / unknown_n : 0.0;
      h_val = h_score(sanity_acc, h_score(purity_known, purity_unknown));
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.losses = breakdown;
    em.acc_val = acc_val;
    em.h_val = h_val;
    if (mixture_on) {
      em.alpha_tk = res.mixture.alpha_tk;
      em.beta_tk = res.mixture.beta_tk;
      em.alpha_tu = res.mixture.alpha_tu;
      em.beta_tu = res.mixture.beta_tu;
      em.mix_tk = res.mixture.mix_tk;
    }
    em.flips_committed = flips_this_epoch;
    em.mask_zero_frac = mask_zero_fraction(res.model);
    res.metrics.push_back(em);
    if (metrics_out) *metrics_out << metrics_to_json(em).dump() << '\n';

    if (h_val > best_h_val) {
      best_h_val = h_val;
      res.best_epoch = epoch;
      res.best_model = res.model;
      res.best_delta = res.delta;
      res.best_target_adj = res.target_adj;
      res.best_flips = res.flips;
    }
  }

  res.embeddings_final =
      infer(res.model, res.target_adj, add_delta(pair.target.features, res.delta), threshold_mode)
          .embeddings;

  const Inference best_inf = infer(res.best_model, res.best_target_adj,
                                   add_delta(pair.target.features, res.best_delta),
                                   threshold_mode);
  const std::vector<int> predictions =
      predict_from_logits(best_inf.logits, threshold_mode, cfg.tau, known_count);
  res.report = evaluate_predictions(predictions, pair.target_eval_labels, known_count);
  res.report.mmd_before =
      mmd_known_unknown(res.embeddings_epoch0, pair.target_eval_labels, known_count);
  res.report.mmd_after =
      mmd_known_unknown(res.embeddings_final, pair.target_eval_labels, known_count);
  return res;
}

}  // namespace osgda
