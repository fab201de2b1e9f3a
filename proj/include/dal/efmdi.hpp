#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dal/common.hpp"
#include "dal/dataio.hpp"

namespace dal {

enum class EncodingMethod { kme, kde };

// Per-feature marginal-distribution representation: the raw sample list per
// feature column plus the method's bandwidth.
struct FeatureEncoding {
  EncodingMethod method = EncodingMethod::kme;
  std::vector<std::vector<double>> samples;  // d lists, one per feature
  double kme_width = 1.0;                    // Gaussian kernel width sigma (kme)
  std::vector<double> kde_bandwidth;         // per-feature h (kde)
  bool bandwidth_floored = false;            // set when a zero-variance h was floored
  int batch_index = -1;

  Index d() const { return static_cast<Index>(samples.size()); }
};

// Pairwise feature dissimilarity between a current batch (rows) and the
// previous batch (columns).
struct CostMatrix {
  Matrix values;  // d x d, >= 0
  int row_tag = 0;
  int col_tag = 0;
};

namespace detail {

// Median of pooled per-feature pairwise absolute differences. Batches larger
// than `cap` rows are subsampled at an even stride to bound the pair count.
inline double median_pairwise_width(const Matrix& features, Index cap = 200) {
  const Index n = features.rows();
  std::vector<Index> idx;
  if (n <= cap) {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
  } else {
    for (Index k = 0; k < cap; ++k) idx.push_back(k * n / cap);
  }
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(features.cols()) * idx.size() * (idx.size() - 1) / 2);
  for (Index f = 0; f < features.cols(); ++f) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        dists.push_back(std::abs(features(idx[i], f) - features(idx[j], f)));
      }
    }
  }
  if (dists.empty()) return 1.0;
  auto mid = dists.begin() + static_cast<long>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double med = *mid;
  return med > 0 ? med : 1.0;
}

inline double gauss_kernel(double a, double b, double sigma) {
  const double u = (a - b) / sigma;
  return std::exp(-0.5 * u * u);
}

// mean_{i,j} k(x_i, y_j) over two sample lists
inline double mean_cross_kernel(const std::vector<double>& x,
                                const std::vector<double>& y, double sigma) {
  double s = 0;
  for (double a : x)
    for (double b : y) s += gauss_kernel(a, b, sigma);
  return s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

// Normal density at x with mean 0 and variance v.
inline double normal_pdf0(double x, double v) {
  return std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * M_PI * v);
}

// mean_{i,j} N(x_i - y_j; 0, v)
inline double mean_cross_npdf(const std::vector<double>& x,
                              const std::vector<double>& y, double v) {
  double s = 0;
  for (double a : x)
    for (double b : y) s += normal_pdf0(a - b, v);
  return s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

}  // namespace detail

// Encode a batch's per-feature marginals. KME stores samples plus a shared
// Gaussian kernel width (median heuristic unless overridden); KDE stores
// samples plus h = 1.05 * std * N^(-1/5) per feature (sample std, floored at
// 1e-6 with the warning flag for zero-variance features).
inline FeatureEncoding encode(const Matrix& features, EncodingMethod method,
                              std::optional<double> width_override = std::nullopt,
                              int batch_index = -1) {
  const Index n = features.rows();
  const Index d = features.cols();
  if (n < 1 || d < 1) throw Error("encode: empty batch");

  FeatureEncoding enc;
  enc.method = method;
  enc.batch_index = batch_index;
  enc.samples.resize(static_cast<std::size_t>(d));
  for (Index f = 0; f < d; ++f) {
    auto& list = enc.samples[static_cast<std::size_t>(f)];
    list.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) list[static_cast<std::size_t>(i)] = features(i, f);
  }

  if (method == EncodingMethod::kme) {
    enc.kme_width = width_override ? *width_override
                                   : detail::median_pairwise_width(features);
    if (enc.kme_width <= 0) throw Error("encode: kernel width must be positive");
  } else {
    enc.kde_bandwidth.resize(static_cast<std::size_t>(d));
    for (Index f = 0; f < d; ++f) {
      const auto& xs = enc.samples[static_cast<std::size_t>(f)];
      const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
      double ss = 0;
      for (double v : xs) ss += (v - mean) * (v - mean);
      const double sd = xs.size() > 1 ? std::sqrt(ss / (xs.size() - 1)) : 0.0;
      double h = 1.05 * sd * std::pow(static_cast<double>(xs.size()), -0.2);
      if (width_override) h = *width_override;
      if (h < 1e-6) {
        h = 1e-6;
        enc.bandwidth_floored = true;
      }
      enc.kde_bandwidth[static_cast<std::size_t>(f)] = h;
    }
  }
  return enc;
}

inline FeatureEncoding encode(const TaskBatch& batch, EncodingMethod method,
                              std::optional<double> width_override = std::nullopt) {
  return encode(batch.features, method, width_override, batch.index);
}

// Squared RKHS distance between the empirical kernel mean embeddings of each
// (current, previous) feature pair; the current encoding's width is
// authoritative. Entries clamp tiny negative round-off at zero.
inline CostMatrix cost_kme(const FeatureEncoding& current, const FeatureEncoding& previous) {
  if (current.method != EncodingMethod::kme || previous.method != EncodingMethod::kme) {
    throw Error("cost_kme: both encodings must be KME");
  }
  if (current.d() != previous.d()) {
    throw Error("cost_kme: dimension mismatch (" + std::to_string(current.d()) +
                " vs " + std::to_string(previous.d()) + ")");
  }
  const Index d = current.d();
  const double sigma = current.kme_width;

  std::vector<double> self_cur(static_cast<std::size_t>(d)), self_prev(static_cast<std::size_t>(d));
  for (Index f = 0; f < d; ++f) {
    self_cur[static_cast<std::size_t>(f)] = detail::mean_cross_kernel(
        current.samples[static_cast<std::size_t>(f)], current.samples[static_cast<std::size_t>(f)], sigma);
    self_prev[static_cast<std::size_t>(f)] = detail::mean_cross_kernel(
        previous.samples[static_cast<std::size_t>(f)], previous.samples[static_cast<std::size_t>(f)], sigma);
  }

  CostMatrix cost;
  cost.values.resize(d, d);
  cost.row_tag = current.batch_index;
  cost.col_tag = previous.batch_index;
  for (Index mu = 0; mu < d; ++mu) {
    for (Index nu = 0; nu < d; ++nu) {
      const double cross = detail::mean_cross_kernel(
          current.samples[static_cast<std::size_t>(mu)],
          previous.samples[static_cast<std::size_t>(nu)], sigma);
      cost.values(mu, nu) = std::max(
          0.0, self_cur[static_cast<std::size_t>(mu)] +
                   self_prev[static_cast<std::size_t>(nu)] - 2.0 * cross);
    }
  }
  return cost;
}

// L2 distance between Gaussian KDE densities, in closed form via the Gaussian
// product identity: for mixtures the integral is a double sum of normal
// densities at sample differences with variance h1^2 + h2^2.
inline CostMatrix cost_kde(const FeatureEncoding& current, const FeatureEncoding& previous) {
  if (current.method != EncodingMethod::kde || previous.method != EncodingMethod::kde) {
    throw Error("cost_kde: both encodings must be KDE");
  }
  if (current.d() != previous.d()) {
    throw Error("cost_kde: dimension mismatch (" + std::to_string(current.d()) +
                " vs " + std::to_string(previous.d()) + ")");
  }
  const Index d = current.d();

  CostMatrix cost;
  cost.values.resize(d, d);
  cost.row_tag = current.batch_index;
  cost.col_tag = previous.batch_index;

  std::vector<double> self_cur(static_cast<std::size_t>(d)), self_prev(static_cast<std::size_t>(d));
  for (Index f = 0; f < d; ++f) {
    const double hc = current.kde_bandwidth[static_cast<std::size_t>(f)];
    const double hp = previous.kde_bandwidth[static_cast<std::size_t>(f)];
    self_cur[static_cast<std::size_t>(f)] = detail::mean_cross_npdf(
        current.samples[static_cast<std::size_t>(f)],
        current.samples[static_cast<std::size_t>(f)], 2.0 * hc * hc);
    self_prev[static_cast<std::size_t>(f)] = detail::mean_cross_npdf(
        previous.samples[static_cast<std::size_t>(f)],
        previous.samples[static_cast<std::size_t>(f)], 2.0 * hp * hp);
  }

  for (Index mu = 0; mu < d; ++mu) {
    const double hc = current.kde_bandwidth[static_cast<std::size_t>(mu)];
    for (Index nu = 0; nu < d; ++nu) {
      const double hp = previous.kde_bandwidth[static_cast<std::size_t>(nu)];
      const double cross = detail::mean_cross_npdf(
          current.samples[static_cast<std::size_t>(mu)],
          previous.samples[static_cast<std::size_t>(nu)], hc * hc + hp * hp);
      cost.values(mu, nu) = std::max(
          0.0, self_cur[static_cast<std::size_t>(mu)] +
                   self_prev[static_cast<std::size_t>(nu)] - 2.0 * cross);
    }
  }
  return cost;
}

}  // namespace dal
