#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "osgda/model.hpp"
#include "osgda/tape.hpp"

namespace osgda {

struct MaskSet {
  std::vector<DenseMatrix> masks;        // per layer, entries in {0, 1}
  double sparsity = 0.0;                 // fraction of entries zeroed per layer
  std::vector<DenseMatrix> last_scores;  // importance magnitudes the masks came from
};

/// Importance scores |∂L/∂M^l| read off the mask nodes of a scoring pass
/// (masks held at all-ones). backward must have run on the tape.
inline std::vector<DenseMatrix> score_importance(const Tape& tape,
                                                 const std::vector<NodeRef>& mask_nodes) {
  if (!tape.backward_done())
    throw std::logic_error("score_importance: backward has not populated gradients");
  std::vector<DenseMatrix> scores;
  scores.reserve(mask_nodes.size());
  for (NodeRef m : mask_nodes) {
    DenseMatrix s = tape.grad(m);
    for (auto& v : s.data) v = std::fabs(v);
    scores.push_back(std::move(s));
  }
  return scores;
}

/// Per layer, zeroes the floor(rho * k) smallest scores; ties broken by
/// lowest flat index first, so the zero-set is deterministic and grows
/// monotonically with rho.
inline MaskSet build_masks(const std::vector<DenseMatrix>& scores, double rho) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("build_masks: rho must be in [0, 1]");
  MaskSet set;
  set.sparsity = rho;
  set.last_scores = scores;
  for (const auto& s : scores) {
    const auto k = s.size();
    const auto zeros = static_cast<std::size_t>(std::floor(rho * static_cast<double>(k)));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&s](std::size_t a, std::size_t b) {
      if (s.data[a] != s.data[b]) return s.data[a] < s.data[b];
      return a < b;
    });
    DenseMatrix m(s.rows, s.cols, 1.0);
    for (std::size_t i = 0; i < zeros; ++i) m.data[order[i]] = 0.0;
    set.masks.push_back(std::move(m));
  }
  return set;
}

/// Installs the masks; weights untouched. Subsequent forwards use them.
inline void apply_masks(Model& model, const MaskSet& set) {
  if (set.masks.size() != model.extractor.layers.size())
    throw std::invalid_argument("apply_masks: layer count mismatch");
  for (std::size_t l = 0; l < set.masks.size(); ++l) {
    auto& layer = model.extractor.layers[l];
    require_same_shape(layer.weight, set.masks[l], "apply_masks");
    layer.mask = set.masks[l];
  }
}

inline double mask_zero_fraction(const Model& model) {
  std::size_t zeros = 0, total = 0;
  for (const auto& layer : model.extractor.layers) {
    total += layer.mask.size();
    for (double v : layer.mask.data)
      if (v == 0.0) ++zeros;
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

}  // namespace osgda
