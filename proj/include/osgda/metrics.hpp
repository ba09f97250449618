#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "osgda/matrix.hpp"

namespace osgda {

/// Harmonic mean of target-known and target-unknown accuracy; 0 when
/// either side is 0.
inline double h_score(double acc_tk, double acc_tu) {
  if (acc_tk < 0.0 || acc_tk > 1.0 || acc_tu < 0.0 || acc_tu > 1.0)
    throw std::invalid_argument("h_score: accuracies must lie in [0, 1]");
  const double s = acc_tk + acc_tu;
  if (s == 0.0) return 0.0;
  return 2.0 * acc_tk * acc_tu / s;
}

struct EvalReport {
  double acc = 0.0;     // overall accuracy over |C_s|+1 classes
  double acc_tk = 0.0;  // accuracy on target-known nodes
  double acc_tu = 0.0;  // accuracy on target-unknown nodes (correct = predicted unknown)
  double h = 0.0;
  std::vector<double> per_class;
  std::optional<double> mmd_before;
  std::optional<double> mmd_after;
};

/// Scores predictions against held-out labels. A known node is correct
/// when the predicted class matches; an unknown node is correct when the
/// prediction is the unknown id, whatever the original novel class was.
inline EvalReport evaluate_predictions(const std::vector<int>& predictions,
                                       const std::vector<int>& eval_labels, int known_count) {
  if (predictions.size() != eval_labels.size())
    throw std::invalid_argument("evaluate_predictions: prediction/label count mismatch");
  if (eval_labels.empty()) throw std::invalid_argument("evaluate_predictions: missing labels");
  const int unknown_id = known_count;
  EvalReport r;
  r.per_class.assign(static_cast<std::size_t>(known_count) + 1, 0.0);
  std::vector<long> class_total(static_cast<std::size_t>(known_count) + 1, 0);
  long correct = 0, known_total = 0, known_correct = 0, unknown_total = 0, unknown_correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int label = eval_labels[i];
    if (label < 0 || label > unknown_id)
      throw std::invalid_argument("evaluate_predictions: label outside [0, known_count]");
    const bool ok = predictions[i] == label;
    ++class_total[label];
    if (ok) {
      ++correct;
      r.per_class[label] += 1.0;
    }
    if (label < known_count) {
      ++known_total;
      if (ok) ++known_correct;
    } else {
      ++unknown_total;
      if (ok) ++unknown_correct;
    }
  }
  const auto n = static_cast<double>(predictions.size());
  r.acc = correct / n;
  r.acc_tk = known_total ? static_cast<double>(known_correct) / known_total : 0.0;
  r.acc_tu = unknown_total ? static_cast<double>(unknown_correct) / unknown_total : 0.0;
  r.h = h_score(r.acc_tk, r.acc_tu);
  for (std::size_t c = 0; c < r.per_class.size(); ++c)
    r.per_class[c] = class_total[c] ? r.per_class[c] / class_total[c] : 0.0;
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j{{"acc", r.acc},       {"acc_tk", r.acc_tk},      {"acc_tu", r.acc_tu},
                   {"h_score", r.h},     {"per_class", r.per_class}};
  if (r.mmd_before) j["mmd_before"] = *r.mmd_before;
  if (r.mmd_after) j["mmd_after"] = *r.mmd_after;
  return j;
}

// ---------------------------------------------------------------------------
// Maximum mean discrepancy diagnostic
// ---------------------------------------------------------------------------

/// Unbiased squared MMD with an RBF kernel, bandwidth = median pairwise
/// distance over the pooled sample. For equal sample sizes the cross term
/// excludes matched pairs, so two identical point sets give exactly zero.
inline double mmd_squared(const std::vector<const double*>& xs, const std::vector<const double*>& ys,
                          int dim) {
  const auto m = xs.size();
  const auto n = ys.size();
  if (m < 2 || n < 2) throw std::invalid_argument("mmd_squared: each group needs >= 2 points");

  auto sqdist = [dim](const double* a, const double* b) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double d = a[j] - b[j];
      s += d * d;
    }
    return s;
  };

  std::vector<const double*> pool(xs);
  pool.insert(pool.end(), ys.begin(), ys.end());
  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      dists.push_back(std::sqrt(sqdist(pool[i], pool[j])));
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  double sigma = dists[dists.size() / 2];
  if (sigma <= 0.0) sigma = 1.0;
  const double gamma = 1.0 / (2.0 * sigma * sigma);
  auto kernel = [&](const double* a, const double* b) { return std::exp(-gamma * sqdist(a, b)); };

  double kxx = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) kxx += kernel(xs[i], xs[j]);
  kxx /= static_cast<double>(m) * (m - 1);

  double kyy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) kyy += kernel(ys[i], ys[j]);
  kyy /= static_cast<double>(n) * (n - 1);

  double kxy = 0.0;
  if (m == n) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) kxy += kernel(xs[i], ys[j]);
    kxy /= static_cast<double>(m) * (m - 1);
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) kxy += kernel(xs[i], ys[j]);
    kxy /= static_cast<double>(m) * n;
  }
  return kxx + kyy - 2.0 * kxy;
}

/// MMD between the known-labeled and unknown-labeled rows of an embedding
/// matrix. Absent (nullopt) when either group is empty or a singleton.
inline std::optional<double> mmd_known_unknown(const DenseMatrix& embeddings,
                                               const std::vector<int>& eval_labels,
                                               int known_count) {
  std::vector<const double*> known, unknown;
  for (int i = 0; i < embeddings.rows; ++i) {
    if (eval_labels[i] < known_count)
      known.push_back(embeddings.row(i));
    else
      unknown.push_back(embeddings.row(i));
  }
  if (known.size() < 2 || unknown.size() < 2) return std::nullopt;
  return mmd_squared(known, unknown, embeddings.cols);
}

// ---------------------------------------------------------------------------
// Embedding export
// ---------------------------------------------------------------------------

/// One row per node: "node_id true_label predicted_label e_0 ... e_{d-1}",
/// printed with enough digits to round-trip bit-exactly.
inline void export_embeddings(const std::string& path, const DenseMatrix& embeddings,
                              const std::vector<int>& true_labels,
                              const std::vector<int>& predictions) {
  if (static_cast<int>(true_labels.size()) != embeddings.rows ||
      static_cast<int>(predictions.size()) != embeddings.rows)
    throw std::invalid_argument("export_embeddings: label/prediction count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  out.precision(17);
  for (int i = 0; i < embeddings.rows; ++i) {
    out << i << ' ' << true_labels[i] << ' ' << predictions[i];
    for (int j = 0; j < embeddings.cols; ++j) out << ' ' << embeddings(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("embedding write failed: " + path);
}

struct EmbeddingFile {
  DenseMatrix embeddings;
  std::vector<int> true_labels;
  std::vector<int> predictions;
};

inline EmbeddingFile load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings: " + path);
  std::vector<std::vector<double>> rows;
  EmbeddingFile f;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int id, label, pred;
    if (!(ls >> id >> label >> pred)) throw std::runtime_error("embeddings: malformed line");
    f.true_labels.push_back(label);
    f.predictions.push_back(pred);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("embeddings: empty file");
  f.embeddings = DenseMatrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      f.embeddings(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return f;
}

}  // namespace osgda
