#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dal/common.hpp"
#include "dal/model.hpp"

namespace dal {

// Graph Laplacian G = D - A over a batch, from a mutual k-NN Gaussian graph.
struct Laplacian {
  Matrix matrix;  // n x n, symmetric, rows sum to 0
  int k = 0;
  double sigma = 0;  // Gaussian width actually used
};

// A_ij = exp(-||x_i - x_j||^2 / sigma^2) iff i and j are each within the
// other's k nearest neighbors (ties by lower index); sigma is the mean
// distance over the retained pairs, floored at 1e-6.
inline Laplacian build_laplacian(const Matrix& features, int k) {
  const Index n = features.rows();
  if (k < 1 || k >= n) {
    throw Error("build_laplacian: k must satisfy 1 <= k < n (k=" + std::to_string(k) +
                ", n=" + std::to_string(n) + ")");
  }

  Matrix sq(n, n);
  for (Index i = 0; i < n; ++i) {
    sq(i, i) = 0;
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (features.row(i) - features.row(j)).squaredNorm();
      sq(i, j) = d2;
      sq(j, i) = d2;
    }
  }

  // neighbor sets, ties broken by lower index
  std::vector<std::vector<Index>> nbr(static_cast<std::size_t>(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (sq(i, a) != sq(i, b)) return sq(i, a) < sq(i, b);
      return a < b;
    });
    nbr[static_cast<std::size_t>(i)].assign(order.begin(), order.begin() + k);
  }
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_nbr(n, n);
  in_nbr.setConstant(false);
  for (Index i = 0; i < n; ++i)
    for (Index j : nbr[static_cast<std::size_t>(i)]) in_nbr(i, j) = true;

  double dist_sum = 0;
  long pair_count = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (in_nbr(i, j) && in_nbr(j, i)) {
        dist_sum += std::sqrt(sq(i, j));
        ++pair_count;
      }
    }
  }
  double sigma = pair_count > 0 ? dist_sum / pair_count : 0.0;
  if (sigma < 1e-6) sigma = 1e-6;

  Matrix A = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (in_nbr(i, j) && in_nbr(j, i)) {
        const double w = std::exp(-sq(i, j) / (sigma * sigma));
        A(i, j) = w;
        A(j, i) = w;
      }
    }
  }

  Laplacian lap;
  lap.k = k;
  lap.sigma = sigma;
  lap.matrix = Matrix(A.rowwise().sum().asDiagonal()) - A;
  return lap;
}

// Tr(W^T X^T G X W) = 1/2 sum_ij A_ij ||f(x_i) - f(x_j)||^2, >= 0.
inline double manifold_penalty(const LinearModel& model, const Matrix& features,
                               const Laplacian& lap) {
  if (features.cols() != model.weights.rows() || features.rows() != lap.matrix.rows()) {
    throw Error("manifold_penalty: dimension mismatch");
  }
  const Matrix fx = features * model.weights;
  const double val = (fx.transpose() * (lap.matrix * fx)).trace();
  return val < 0 && val > -1e-9 ? 0.0 : val;
}

}  // namespace dal
