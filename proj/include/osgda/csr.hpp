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

namespace osgda {

/// Symmetric sparse adjacency in CSR form with self-loops and cached GCN
/// normalization coefficients: norm_val[e] = 1/sqrt(deg(u) * deg(v)) where
/// deg counts the self-loop.
struct CsrAdjacency {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> norm_val;

  /// Builds from undirected pairs: symmetrizes, deduplicates, adds one
  /// self-loop per node, computes normalization.
  static CsrAdjacency from_edges(int n, const std::vector<std::pair<int, int>>& pairs) {
    if (n <= 0) throw std::invalid_argument("CsrAdjacency: node count must be positive");
    std::vector<std::set<int>> nbr(static_cast<std::size_t>(n));
    for (auto [u, v] : pairs) {
      if (u < 0 || u >= n || v < 0 || v >= n)
        throw std::out_of_range("CsrAdjacency: node id " + std::to_string(std::max(u, v)) +
                                " outside [0, " + std::to_string(n) + ")");
      nbr[u].insert(v);
      nbr[v].insert(u);
    }
    for (int u = 0; u < n; ++u) nbr[u].insert(u);

    CsrAdjacency a;
    a.n = n;
    a.row_ptr.resize(static_cast<std::size_t>(n) + 1, 0);
    for (int u = 0; u < n; ++u) a.row_ptr[u + 1] = a.row_ptr[u] + static_cast<int>(nbr[u].size());
    a.col_idx.reserve(a.row_ptr[n]);
    for (int u = 0; u < n; ++u) a.col_idx.insert(a.col_idx.end(), nbr[u].begin(), nbr[u].end());
    a.rebuild_normalization();
    return a;
  }

  /// Degree counting the self-loop.
  int degree(int u) const { return row_ptr[u + 1] - row_ptr[u]; }

  bool has_edge(int u, int v) const {
    const auto* b = col_idx.data() + row_ptr[u];
    const auto* e = col_idx.data() + row_ptr[u + 1];
    return std::binary_search(b, e, v);
  }

  bool has_normalization() const { return norm_val.size() == col_idx.size() && !col_idx.empty(); }

  void rebuild_normalization() {
    norm_val.assign(col_idx.size(), 0.0);
    for (int u = 0; u < n; ++u) {
      const double du = degree(u);
      for (int e = row_ptr[u]; e < row_ptr[u + 1]; ++e) {
        const double dv = degree(col_idx[e]);
        norm_val[e] = 1.0 / std::sqrt(du * dv);
      }
    }
  }

  /// Unordered edge list (u < v), self-loops excluded.
  std::vector<std::pair<int, int>> undirected_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < n; ++u)
      for (int e = row_ptr[u]; e < row_ptr[u + 1]; ++e)
        if (u < col_idx[e]) out.emplace_back(u, col_idx[e]);
    return out;
  }

  int undirected_edge_count() const {
    int c = 0;
    for (int u = 0; u < n; ++u)
      for (int e = row_ptr[u]; e < row_ptr[u + 1]; ++e)
        if (u < col_idx[e]) ++c;
    return c;
  }

  bool operator==(const CsrAdjacency& o) const {
    return n == o.n && row_ptr == o.row_ptr && col_idx == o.col_idx && norm_val == o.norm_val;
  }
};

/// Reads a whitespace-separated edge list ("u v" per line, 0-indexed,
/// '#' comments). Node count is declared by the caller.
inline CsrAdjacency load_edge_list(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long u, v;
    if (!(ls >> u)) continue;  // blank or comment-only line
    if (!(ls >> v)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed edge line");
    }
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": trailing tokens");
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": node id " +
                               std::to_string(std::max(u, v)) + " >= declared n=" +
                               std::to_string(n));
    pairs.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return CsrAdjacency::from_edges(n, pairs);
}

/// Writes each undirected edge once (u < v); self-loops are implicit and
/// re-added on load.
inline void save_edge_list(const CsrAdjacency& adj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  for (auto [u, v] : adj.undirected_edges()) out << u << ' ' << v << '\n';
}

}  // namespace osgda
