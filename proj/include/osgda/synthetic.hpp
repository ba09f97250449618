#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "osgda/graph_data.hpp"
#include "osgda/rng.hpp"

namespace osgda {

/// Stochastic-block-model generator for a shifted source/target domain
/// pair. The source carries only the known classes; the target carries all
/// classes, with block probabilities and class-conditional feature means
/// perturbed by the shift parameters.
struct GeneratorSpec {
  int source_nodes = 400;
  int target_nodes = 400;
  int class_count = 5;
  int known_count = 3;
  int feature_dim = 16;
  double p_intra = 0.10;
  double p_inter = 0.01;
  double feature_noise = 1.0;
  double shift_p_intra = 0.0;   // added to target intra-block probability
  double shift_p_inter = 0.0;   // added to target inter-block probability
  double mean_shift = 0.0;      // scale of per-class target mean perturbation
  double mean_rotation = 0.0;   // radians, Givens rotations on coordinate pairs
  double mean_scale = 1.5;      // scale of auto-generated class means
  double min_mean_separation = 0.0;  // redraw auto means until pairwise distance >= this
  std::vector<std::vector<double>> class_means;  // optional explicit means

  void validate() const {
    if (source_nodes <= 0 || target_nodes <= 0) throw std::invalid_argument("node counts must be positive");
    if (class_count < 2) throw std::invalid_argument("class_count must be >= 2");
    if (known_count < 1 || known_count >= class_count)
      throw std::invalid_argument("known_count must be in [1, class_count)");
    if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
    if (p_intra < 0.0 || p_intra > 1.0 || p_inter < 0.0 || p_inter > 1.0)
      throw std::invalid_argument("edge probabilities must lie in [0, 1]");
    if (!class_means.empty()) {
      if (static_cast<int>(class_means.size()) != class_count)
        throw std::invalid_argument("class_means must have class_count rows");
      for (const auto& m : class_means)
        if (static_cast<int>(m.size()) != feature_dim)
          throw std::invalid_argument("class_means rows must have feature_dim entries");
    }
  }
};

inline void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = nlohmann::json{{"source_nodes", s.source_nodes},
                     {"target_nodes", s.target_nodes},
                     {"class_count", s.class_count},
                     {"known_count", s.known_count},
                     {"feature_dim", s.feature_dim},
                     {"p_intra", s.p_intra},
                     {"p_inter", s.p_inter},
                     {"feature_noise", s.feature_noise},
                     {"shift_p_intra", s.shift_p_intra},
                     {"shift_p_inter", s.shift_p_inter},
                     {"mean_shift", s.mean_shift},
                     {"mean_rotation", s.mean_rotation},
                     {"mean_scale", s.mean_scale},
                     {"min_mean_separation", s.min_mean_separation}};
  if (!s.class_means.empty()) j["class_means"] = s.class_means;
}

inline void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  s = GeneratorSpec{};
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("source_nodes", s.source_nodes);
  get("target_nodes", s.target_nodes);
  get("class_count", s.class_count);
  get("known_count", s.known_count);
  get("feature_dim", s.feature_dim);
  get("p_intra", s.p_intra);
  get("p_inter", s.p_inter);
  get("feature_noise", s.feature_noise);
  get("shift_p_intra", s.shift_p_intra);
  get("shift_p_inter", s.shift_p_inter);
  get("mean_shift", s.mean_shift);
  get("mean_rotation", s.mean_rotation);
  get("mean_scale", s.mean_scale);
  get("min_mean_separation", s.min_mean_separation);
  get("class_means", s.class_means);
}

namespace detail {

inline double clamp01(double p) { return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p); }

/// Balanced contiguous class assignment: node i -> floor(i * k / n).
inline std::vector<int> block_labels(int n, int k) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[i] = static_cast<int>((static_cast<long long>(i) * k) / n);
  return labels;
}

inline LabeledGraph sample_sbm(int n, const std::vector<int>& labels,
                               const std::vector<std::vector<double>>& means, double p_intra,
                               double p_inter, double noise, int class_count, RngStream& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? p_intra : p_inter;
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  LabeledGraph g;
  g.adjacency = CsrAdjacency::from_edges(n, edges);
  const int f = static_cast<int>(means.front().size());
  g.features = DenseMatrix(n, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) g.features(i, j) = means[labels[i]][j] + noise * rng.normal();
  g.labels = labels;
  g.class_count = class_count;
  return g;
}

/// Rotation angle applied to disjoint consecutive coordinate pairs.
inline std::vector<double> rotate_pairs(const std::vector<double>& x, double theta) {
  std::vector<double> y = x;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i + 1 < y.size(); i += 2) {
    const double a = y[i], b = y[i + 1];
    y[i] = c * a - s * b;
    y[i + 1] = s * a + c * b;
  }
  return y;
}

}  // namespace detail

struct SyntheticDomains {
  LabeledGraph source;  // raw labels in [0, known_count)
  LabeledGraph target;  // raw labels in [0, class_count)
};

/// Draws the raw pair: source SBM over the known classes, target SBM over
/// all classes under the shifted distribution.
inline SyntheticDomains generate_synthetic_raw(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();

  std::vector<std::vector<double>> means = spec.class_means;
  if (means.empty()) {
    RngStream mrng(seed, "gen-means");
    auto draw = [&] {
      std::vector<std::vector<double>> m(spec.class_count,
                                         std::vector<double>(spec.feature_dim));
      for (auto& row : m)
        for (auto& v : row) v = spec.mean_scale * mrng.normal();
      return m;
    };
    auto min_separation = [](const std::vector<std::vector<double>>& m) {
      double best = 1e300;
      for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = a + 1; b < m.size(); ++b) {
          double d = 0.0;
          for (std::size_t j = 0; j < m[a].size(); ++j)
            d += (m[a][j] - m[b][j]) * (m[a][j] - m[b][j]);
          best = std::min(best, std::sqrt(d));
        }
      return best;
    };
    means = draw();
    double sep = min_separation(means);
    for (int attempt = 0; attempt < 200 && sep < spec.min_mean_separation; ++attempt) {
      auto candidate = draw();
      const double s = min_separation(candidate);
      if (s > sep) {
        means = std::move(candidate);
        sep = s;
      }
    }
  }

  std::vector<std::vector<double>> target_means(spec.class_count);
  RngStream srng(seed, "gen-shift");
  for (int c = 0; c < spec.class_count; ++c) {
    target_means[c] = detail::rotate_pairs(means[c], spec.mean_rotation);
    for (auto& v : target_means[c]) v += spec.mean_shift * srng.normal();
  }

  SyntheticDomains out;
  {
    RngStream rng(seed, "gen-source");
    const auto labels = detail::block_labels(spec.source_nodes, spec.known_count);
    out.source = detail::sample_sbm(spec.source_nodes, labels, means, spec.p_intra, spec.p_inter,
                                    spec.feature_noise, spec.known_count, rng);
  }
  {
    RngStream rng(seed, "gen-target");
    const auto labels = detail::block_labels(spec.target_nodes, spec.class_count);
    out.target = detail::sample_sbm(spec.target_nodes, labels, target_means,
                                    detail::clamp01(spec.p_intra + spec.shift_p_intra),
                                    detail::clamp01(spec.p_inter + spec.shift_p_inter),
                                    spec.feature_noise, spec.class_count, rng);
  }
  return out;
}

inline DomainPair generate_synthetic_pair(const GeneratorSpec& spec, std::uint64_t seed) {
  const SyntheticDomains raw = generate_synthetic_raw(spec, seed);
  std::set<int> known;
  for (int c = 0; c < spec.known_count; ++c) known.insert(c);
  return make_domain_pair(raw.source, raw.target, known);
}

}  // namespace osgda
