#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "osgda/matrix.hpp"

namespace osgda {

constexpr double kEntropyEps = 1e-4;

struct EntropyProfile {
  std::vector<double> raw;         // in [0, ln |C_s|]
  std::vector<double> normalized;  // raw / ln |C_s|, clamped to [eps, 1-eps]
};

/// Shannon entropy of the softmax over the known-class logits only; the
/// unknown logit is excluded by construction of the input matrix.
inline EntropyProfile compute_entropy(const DenseMatrix& known_logits) {
  if (known_logits.cols < 2)
    throw std::invalid_argument("compute_entropy: need at least 2 known classes");
  const double log_k = std::log(static_cast<double>(known_logits.cols));
  EntropyProfile profile;
  profile.raw.reserve(known_logits.rows);
  profile.normalized.reserve(known_logits.rows);
  for (int i = 0; i < known_logits.rows; ++i) {
    const double* x = known_logits.row(i);
    double mx = x[0];
    for (int j = 1; j < known_logits.cols; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (int j = 0; j < known_logits.cols; ++j) s += std::exp(x[j] - mx);
    double h = 0.0;
    for (int j = 0; j < known_logits.cols; ++j) {
      const double p = std::exp(x[j] - mx) / s;
      if (p > 0.0) h -= p * std::log(p);
    }
    h = std::max(0.0, h);
    profile.raw.push_back(h);
    profile.normalized.push_back(
        std::clamp(h / log_k, kEntropyEps, 1.0 - kEntropyEps));
  }
  return profile;
}

/// Two-component Beta mixture over normalized entropies. Component tk is
/// the lower-mean one.
struct BetaMixture {
  double alpha_tk = 1.0, beta_tk = 1.0;
  double alpha_tu = 1.0, beta_tu = 1.0;
  double mix_tk = 0.5, mix_tu = 0.5;
  bool degenerate = false;
  double log_likelihood = 0.0;

  double mean_tk() const { return alpha_tk / (alpha_tk + beta_tk); }
  double mean_tu() const { return alpha_tu / (alpha_tu + beta_tu); }
};

inline double beta_log_pdf(double alpha, double beta, double x) {
  return std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta) +
         (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log(1.0 - x);
}

namespace detail {

/// Method of moments for Beta shape parameters from a mean/variance pair.
inline void beta_from_moments(double m, double v, double& alpha, double& beta) {
  m = std::clamp(m, 1e-6, 1.0 - 1e-6);
  double c = m * (1.0 - m) / std::max(v, 1e-12) - 1.0;
  c = std::clamp(c, 1e-6, 1e8);
  alpha = std::clamp(m * c, 1e-2, 1e6);
  beta = std::clamp((1.0 - m) * c, 1e-2, 1e6);
}

inline double mixture_log_likelihood(const BetaMixture& mix, const std::vector<double>& e) {
  double ll = 0.0;
  for (double x : e) {
    const double ptk = mix.mix_tk * std::exp(beta_log_pdf(mix.alpha_tk, mix.beta_tk, x));
    const double ptu = mix.mix_tu * std::exp(beta_log_pdf(mix.alpha_tu, mix.beta_tu, x));
    ll += std::log(std::max(ptk + ptu, 1e-300));
  }
  return ll;
}

}  // namespace detail

/// EM fit: E-step responsibilities, M-step by weighted method of moments.
/// Initialization splits the samples at the median entropy. Falls back to
/// a flagged single-component fit when the sample is degenerate.
inline BetaMixture fit_beta_mixture_em(const EntropyProfile& profile, int iterations = 20) {
  const auto& e = profile.normalized;
  if (e.size() < 10) throw std::invalid_argument("fit_beta_mixture_em: need >= 10 samples");
  if (iterations < 1) throw std::invalid_argument("fit_beta_mixture_em: iterations must be >= 1");

  const std::size_t n = e.size();
  double mean = 0.0;
  for (double x : e) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : e) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);

  BetaMixture mix;
  if (var < 1e-12) {
    mix.degenerate = true;
    detail::beta_from_moments(mean, 1e-4, mix.alpha_tk, mix.beta_tk);
    mix.alpha_tu = mix.alpha_tk;
    mix.beta_tu = mix.beta_tk;
    mix.log_likelihood = detail::mixture_log_likelihood(mix, e);
    return mix;
  }

  // Median-split initialization, each half by unweighted moments.
  std::vector<double> sorted(e);
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[n / 2];
  std::vector<double> low, high;
  for (double x : e) (x <= median ? low : high).push_back(x);
  if (high.size() < 2) {
    // Nearly all mass at or below the median; a two-component story is
    // unsupported, same fallback as zero variance.
    mix.degenerate = true;
    detail::beta_from_moments(mean, var, mix.alpha_tk, mix.beta_tk);
    mix.alpha_tu = mix.alpha_tk;
    mix.beta_tu = mix.beta_tk;
    mix.log_likelihood = detail::mixture_log_likelihood(mix, e);
    return mix;
  }
  auto moments = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size());
    return std::pair<double, double>{m, std::max(v, 1e-6)};
  };
  auto [m_lo, v_lo] = moments(low);
  auto [m_hi, v_hi] = moments(high);
  detail::beta_from_moments(m_lo, v_lo, mix.alpha_tk, mix.beta_tk);
  detail::beta_from_moments(m_hi, v_hi, mix.alpha_tu, mix.beta_tu);
  mix.mix_tk = 0.5;
  mix.mix_tu = 0.5;

  double prev_ll = detail::mixture_log_likelihood(mix, e);
  std::vector<double> resp(n);
  for (int it = 0; it < iterations; ++it) {
    // E-step
    for (std::size_t i = 0; i < n; ++i) {
      const double ptk = mix.mix_tk * std::exp(beta_log_pdf(mix.alpha_tk, mix.beta_tk, e[i]));
      const double ptu = mix.mix_tu * std::exp(beta_log_pdf(mix.alpha_tu, mix.beta_tu, e[i]));
      resp[i] = ptk / std::max(ptk + ptu, 1e-300);
    }
    // M-step
    double w_tk = 0.0;
    for (double r : resp) w_tk += r;
    const double w_tu = static_cast<double>(n) - w_tk;
    if (w_tk < 1e-8 || w_tu < 1e-8) break;  // one component vanished; keep last fit
    mix.mix_tk = w_tk / static_cast<double>(n);
    mix.mix_tu = 1.0 - mix.mix_tk;
    double m_tk = 0.0, m_tu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m_tk += resp[i] * e[i];
      m_tu += (1.0 - resp[i]) * e[i];
    }
    m_tk /= w_tk;
    m_tu /= w_tu;
    double v_tk = 0.0, v_tu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v_tk += resp[i] * (e[i] - m_tk) * (e[i] - m_tk);
      v_tu += (1.0 - resp[i]) * (e[i] - m_tu) * (e[i] - m_tu);
    }
    v_tk /= w_tk;
    v_tu /= w_tu;
    detail::beta_from_moments(m_tk, v_tk, mix.alpha_tk, mix.beta_tk);
    detail::beta_from_moments(m_tu, v_tu, mix.alpha_tu, mix.beta_tu);

    const double ll = detail::mixture_log_likelihood(mix, e);
    if (ll < prev_ll - 1e-8)
      std::cerr << "fit_beta_mixture_em: log-likelihood decreased by " << (prev_ll - ll)
                << " at iteration " << it << "\n";
    prev_ll = ll;
  }

  if (mix.mean_tk() > mix.mean_tu()) {
    std::swap(mix.alpha_tk, mix.alpha_tu);
    std::swap(mix.beta_tk, mix.beta_tu);
    std::swap(mix.mix_tk, mix.mix_tu);
  }
  mix.log_likelihood = prev_ll;
  return mix;
}

/// Bayes posterior p(tk | e), p(tu | e) = 1 - p(tk | e). Inputs outside
/// (0, 1) are clamped to the entropy working range first.
inline std::pair<double, double> posterior_known(const BetaMixture& mix, double e) {
  if (mix.degenerate) return {0.5, 0.5};
  e = std::clamp(e, kEntropyEps, 1.0 - kEntropyEps);
  const double ptk = mix.mix_tk * std::exp(beta_log_pdf(mix.alpha_tk, mix.beta_tk, e));
  const double ptu = mix.mix_tu * std::exp(beta_log_pdf(mix.alpha_tu, mix.beta_tu, e));
  const double denom = ptk + ptu;
  if (denom <= 0.0 || !std::isfinite(denom)) return {0.5, 0.5};
  const double p = ptk / denom;
  return {p, 1.0 - p};
}

}  // namespace osgda
