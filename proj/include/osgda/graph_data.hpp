#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "osgda/csr.hpp"
#include "osgda/matrix.hpp"
#include "osgda/rng.hpp"

namespace osgda {

struct LabeledGraph {
  CsrAdjacency adjacency;
  DenseMatrix features;        // n x f
  std::vector<int> labels;     // per node; -1 means unlabeled; empty means none
  int class_count = 0;

  int node_count() const { return adjacency.n; }
  int feature_dim() const { return features.cols; }
};

/// Labeled source + unlabeled target. Target evaluation labels are already
/// open-set relabeled (known classes 0..known_count-1, everything else
/// mapped to unknown_id) and are only for the evaluator's eyes.
struct DomainPair {
  LabeledGraph source;
  LabeledGraph target;                 // labels cleared
  std::vector<int> target_eval_labels;
  int known_count = 0;

  int unknown_id() const { return known_count; }
};

struct SplitIndices {
  std::vector<int> train, valid, sanity;
};

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Feature file: header "n f", then either n dense rows of f reals, or
/// sparse "node_id feat_id value" triplets. A first data line with exactly
/// f tokens selects the dense reading (dense wins when f == 3).
inline DenseMatrix load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  int n = 0, f = 0;
  if (!(in >> n >> f) || n <= 0 || f <= 0)
    throw std::runtime_error(path + ": bad feature header, expected \"n f\"");
  std::string rest;
  std::getline(in, rest);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error(path + ": no feature rows");

  auto token_count = [](const std::string& s) {
    std::istringstream ls(s);
    std::string t;
    int c = 0;
    while (ls >> t) ++c;
    return c;
  };

  DenseMatrix m(n, f);
  const bool dense = token_count(lines.front()) == f;
  if (dense) {
    if (static_cast<int>(lines.size()) != n)
      throw std::runtime_error(path + ": expected " + std::to_string(n) + " dense rows, got " +
                               std::to_string(lines.size()));
    for (int i = 0; i < n; ++i) {
      std::istringstream ls(lines[i]);
      for (int j = 0; j < f; ++j)
        if (!(ls >> m(i, j)))
          throw std::runtime_error(path + ": malformed dense feature row " + std::to_string(i));
    }
  } else {
    for (const auto& l : lines) {
      std::istringstream ls(l);
      int i, j;
      double v;
      if (!(ls >> i >> j >> v))
        throw std::runtime_error(path + ": malformed sparse feature line: " + l);
      if (i < 0 || i >= n || j < 0 || j >= f)
        throw std::runtime_error(path + ": sparse index out of range: " + l);
      m(i, j) = v;
    }
  }
  return m;
}

inline void save_features(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  out << m.rows << ' ' << m.cols << '\n';
  out.precision(17);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

/// Label file: one integer per line, -1 for unlabeled.
inline std::vector<int> load_labels(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  std::vector<int> labels;
  labels.reserve(n);
  long v;
  while (in >> v) labels.push_back(static_cast<int>(v));
  if (static_cast<int>(labels.size()) != n)
    throw std::runtime_error(path + ": expected " + std::to_string(n) + " labels, got " +
                             std::to_string(labels.size()));
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write label file: " + path);
  for (int v : labels) out << v << '\n';
}

/// Loads one domain from <dir>/{edges.txt,features.txt,labels.txt}. The
/// node count comes from the feature header. labels.txt is optional.
inline LabeledGraph load_domain_dir(const std::string& dir, bool row_normalize = false) {
  LabeledGraph g;
  g.features = load_features(dir + "/features.txt");
  g.adjacency = load_edge_list(dir + "/edges.txt", g.features.rows);
  std::ifstream probe(dir + "/labels.txt");
  if (probe.good()) {
    g.labels = load_labels(dir + "/labels.txt", g.features.rows);
    int mx = -1;
    for (int v : g.labels) mx = std::max(mx, v);
    g.class_count = mx + 1;
  }
  if (row_normalize) {
    for (int i = 0; i < g.features.rows; ++i) {
      double s = 0.0;
      for (int j = 0; j < g.features.cols; ++j) s += g.features(i, j) * g.features(i, j);
      s = std::sqrt(s);
      if (s > 0.0)
        for (int j = 0; j < g.features.cols; ++j) g.features(i, j) /= s;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Open-set relabeling and splits
// ---------------------------------------------------------------------------

/// Remaps the known classes to 0..k-1 preserving their order; every other
/// class becomes the unknown id k. Unlabeled (-1) stays unlabeled.
inline LabeledGraph relabel_openset(const LabeledGraph& g, const std::set<int>& known) {
  if (known.empty()) throw std::invalid_argument("relabel_openset: empty known set");
  std::vector<int> remap(static_cast<std::size_t>(g.class_count), -1);
  int next = 0;
  for (int c : known) {
    if (c < 0 || c >= g.class_count)
      throw std::invalid_argument("relabel_openset: known class " + std::to_string(c) +
                                  " not in [0, " + std::to_string(g.class_count) + ")");
    remap[c] = next++;
  }
  const int unknown_id = next;
  LabeledGraph out = g;
  for (auto& l : out.labels) {
    if (l < 0) continue;
    l = remap[l] >= 0 ? remap[l] : unknown_id;
  }
  out.class_count = unknown_id + 1;
  return out;
}

/// Assembles a DomainPair from raw-labeled domains. Source nodes outside
/// the known set become unlabeled; target labels move to the held-out
/// evaluation vector.
inline DomainPair make_domain_pair(const LabeledGraph& source_raw, const LabeledGraph& target_raw,
                                   const std::set<int>& known) {
  DomainPair pair;
  pair.known_count = static_cast<int>(known.size());
  pair.source = relabel_openset(source_raw, known);
  for (auto& l : pair.source.labels)
    if (l == pair.known_count) l = -1;
  pair.source.class_count = pair.known_count;

  LabeledGraph tgt = relabel_openset(target_raw, known);
  pair.target_eval_labels = tgt.labels;
  tgt.labels.clear();
  pair.target = std::move(tgt);
  return pair;
}

/// Per-class stratified 70/10/20 split over labeled source nodes with
/// label < known_count. Floor rounding; the remainder goes to train.
/// Classes with fewer than 3 nodes go wholly to train with a warning.
inline SplitIndices split_source(const LabeledGraph& g, int known_count, std::uint64_t seed) {
  if (g.labels.empty()) throw std::invalid_argument("split_source: graph has no labels");
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(known_count));
  for (int i = 0; i < static_cast<int>(g.labels.size()); ++i) {
    const int l = g.labels[i];
    if (l >= 0 && l < known_count) by_class[l].push_back(i);
  }
  RngStream rng(seed, "split");
  SplitIndices s;
  for (int c = 0; c < known_count; ++c) {
    auto& nodes = by_class[c];
    rng.shuffle(nodes);
    const int n = static_cast<int>(nodes.size());
    if (n < 3) {
      if (n > 0)
        std::cerr << "split_source: class " << c << " has only " << n
                  << " nodes; placing all in train\n";
      s.train.insert(s.train.end(), nodes.begin(), nodes.end());
      continue;
    }
    const int n_valid = n / 10;
    const int n_sanity = n / 5;
    const int n_train = n - n_valid - n_sanity;
    s.train.insert(s.train.end(), nodes.begin(), nodes.begin() + n_train);
    s.valid.insert(s.valid.end(), nodes.begin() + n_train, nodes.begin() + n_train + n_valid);
    s.sanity.insert(s.sanity.end(), nodes.begin() + n_train + n_valid, nodes.end());
  }
  return s;
}

}  // namespace osgda
