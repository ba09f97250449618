#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osgda/csr.hpp"
#include "osgda/rng.hpp"
#include "osgda/tape.hpp"

namespace osgda {

/// X_t + ΔX_t. Thin wrapper so the delta keeps its own handle.
inline NodeRef apply_feature_delta(Tape& tape, NodeRef features, NodeRef delta) {
  return tape.add(features, delta);
}

struct EdgeFlip {
  int u = 0, v = 0;   // canonical u < v
  bool add = false;   // false = deletion of an existing edge
  double score = 0.0;
};

/// Deletion candidates are the current edges; addition candidates are m
/// uniformly sampled absent pairs. The two sets are disjoint by
/// construction and contain no self-loops.
struct CandidatePool {
  std::vector<std::pair<int, int>> deletions;
  std::vector<std::pair<int, int>> additions;

  bool empty() const { return deletions.empty() && additions.empty(); }
};

inline CandidatePool build_candidate_pool(const CsrAdjacency& adj, int m, RngStream& rng) {
  CandidatePool pool;
  pool.deletions = adj.undirected_edges();
  const long long n = adj.n;
  const long long capacity = n * (n - 1) / 2 - static_cast<long long>(pool.deletions.size());
  const int want = static_cast<int>(std::min<long long>(m, std::max<long long>(capacity, 0)));
  std::set<std::pair<int, int>> sampled;
  int attempts = 0;
  const int max_attempts = want * 60 + 1000;
  while (static_cast<int>(sampled.size()) < want && attempts < max_attempts) {
    ++attempts;
    int u = static_cast<int>(rng.uniform_int(0, adj.n - 1));
    int v = static_cast<int>(rng.uniform_int(0, adj.n - 1));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (adj.has_edge(u, v)) continue;
    sampled.emplace(u, v);
  }
  pool.additions.assign(sampled.begin(), sampled.end());
  return pool;
}

/// Gradient of the loss with respect to one propagation pass, recorded per
/// spmm occurrence: d L / d A_hat[u][v] = sum over taps of
/// grad_out[u]·in[v] (plus the mirrored term, since the pair's two entries
/// move together).
struct SpmmTap {
  const DenseMatrix* out_grad;
  const DenseMatrix* in_value;
};

inline std::vector<SpmmTap> collect_spmm_taps(const Tape& tape, const CsrAdjacency& adj,
                                              const std::vector<NodeRef>& spmm_nodes,
                                              const std::vector<NodeRef>& spmm_inputs) {
  (void)adj;
  if (spmm_nodes.size() != spmm_inputs.size())
    throw std::invalid_argument("collect_spmm_taps: node/input count mismatch");
  std::vector<SpmmTap> taps;
  for (std::size_t i = 0; i < spmm_nodes.size(); ++i)
    taps.push_back({&tape.grad(spmm_nodes[i]), &tape.value(spmm_inputs[i])});
  return taps;
}

/// Scores every candidate flip by the relaxed-adjacency gradient: the
/// pair's normalized coefficient is treated as perturbable, so a flip's
/// predicted loss change is ±ν·g with ν = 1/sqrt(deg_u·deg_v) at current
/// degrees. Positive score = the flip is predicted to reduce the loss.
inline std::vector<EdgeFlip> score_edge_flips(const CandidatePool& pool,
                                              const std::vector<SpmmTap>& taps,
                                              const CsrAdjacency& adj) {
  if (pool.empty()) throw std::invalid_argument("score_edge_flips: empty candidate pool");
  auto pair_grad = [&taps](int u, int v) {
    double g = 0.0;
    for (const auto& t : taps) {
      const DenseMatrix& go = *t.out_grad;
      const DenseMatrix& in = *t.in_value;
      const double* gu = go.row(u);
      const double* gv = go.row(v);
      const double* xu = in.row(u);
      const double* xv = in.row(v);
      for (int j = 0; j < in.cols; ++j) g += gu[j] * xv[j] + gv[j] * xu[j];
    }
    return g;
  };
  std::vector<EdgeFlip> flips;
  flips.reserve(pool.deletions.size() + pool.additions.size());
  for (auto [u, v] : pool.deletions) {
    const double nu = 1.0 / std::sqrt(double(adj.degree(u)) * double(adj.degree(v)));
    flips.push_back({u, v, false, +nu * pair_grad(u, v)});
  }
  for (auto [u, v] : pool.additions) {
    const double nu = 1.0 / std::sqrt(double(adj.degree(u)) * double(adj.degree(v)));
    flips.push_back({u, v, true, -nu * pair_grad(u, v)});
  }
  return flips;
}

/// XOR-applies the flips: present pairs are removed, absent ones added,
/// symmetry kept, normalization rebuilt. Each unordered pair may appear
/// once; self-loop flips are rejected.
inline CsrAdjacency commit_flips(const CsrAdjacency& adj, const std::vector<EdgeFlip>& flips,
                                 int budget) {
  if (static_cast<int>(flips.size()) > budget)
    throw std::invalid_argument("commit_flips: " + std::to_string(flips.size()) +
                                " flips exceed budget " + std::to_string(budget));
  std::set<std::pair<int, int>> edges;
  for (auto [u, v] : adj.undirected_edges()) edges.emplace(u, v);
  std::set<std::pair<int, int>> seen;
  for (const auto& f : flips) {
    int u = f.u, v = f.v;
    if (u == v) throw std::invalid_argument("commit_flips: self-loop flip rejected");
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second)
      throw std::invalid_argument("commit_flips: duplicate pair in one commit");
    const auto key = std::make_pair(u, v);
    if (edges.count(key))
      edges.erase(key);
    else
      edges.insert(key);
  }
  std::vector<std::pair<int, int>> pairs(edges.begin(), edges.end());
  return CsrAdjacency::from_edges(adj.n, pairs);
}

// ---------------------------------------------------------------------------
// Edit log: one line per committed flip, "epoch u v add|del score".
// ---------------------------------------------------------------------------

inline void append_edit_log(std::ostream& out, int epoch, const EdgeFlip& f) {
  out.precision(17);
  out << epoch << ' ' << f.u << ' ' << f.v << ' ' << (f.add ? "add" : "del") << ' ' << f.score
      << '\n';
}

/// Replays a log against a base adjacency; used to audit that the log
/// reconstructs the final edited graph exactly.
inline CsrAdjacency replay_edit_log(const std::string& path, const CsrAdjacency& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edit log: " + path);
  CsrAdjacency adj = base;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int epoch, u, v;
    std::string kind;
    double score;
    if (!(ls >> epoch >> u >> v >> kind >> score))
      throw std::runtime_error("edit log: malformed line: " + line);
    EdgeFlip f{u, v, kind == "add", score};
    adj = commit_flips(adj, {f}, 1);
  }
  return adj;
}

}  // namespace osgda
