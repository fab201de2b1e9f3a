#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dal/common.hpp"
#include "dal/model.hpp"

namespace dal {

// Inputs for the Rademacher-complexity bound quantity. The kernel's first
// `labeled` rows
// correspond to the labeled points; `graph_factor` is any G_f with
// L = G_f G_f^T.
struct BoundInputs {
  Matrix kernel;        // n x n PSD Gram matrix over batch rows
  Index labeled = 0;    // l, labeled rows come first
  Matrix graph_factor;  // n x r
  double alpha_t = 1;   // transformed alpha (> 0)
  double beta_t = 0;    // transformed beta (>= 0)
};

namespace detail {

inline void check_bound_inputs(const BoundInputs& in) {
  const Index n = in.kernel.rows();
  if (in.kernel.cols() != n) throw Error("BoundInputs: kernel must be square");
  if (in.labeled < 1 || in.labeled > n) throw Error("BoundInputs: bad labeled count");
  if (in.graph_factor.rows() != n) throw Error("BoundInputs: graph factor row mismatch");
  if (!(in.alpha_t > 0)) throw Error("BoundInputs: alpha_t must be > 0");
  if (in.beta_t < 0) throw Error("BoundInputs: beta_t must be >= 0");
  const double asym = (in.kernel - in.kernel.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, in.kernel.cwiseAbs().maxCoeff())) {
    throw Error("BoundInputs: kernel is not symmetric");
  }
}

}  // namespace detail

// Unlabeled-data reduction Delta(beta_t) = beta_t Tr(J^T (I + beta_t M)^-1 J)
// with J = alpha_t^-1 G^T K_L^T and M = alpha_t^-1 G^T K G.
inline double delta_beta(const BoundInputs& in, double beta_t) {
  detail::check_bound_inputs(in);
  if (beta_t == 0) return 0.0;
  const Index l = in.labeled;
  const Matrix KL = in.kernel.topRows(l);  // l x n
  const Matrix J = (in.graph_factor.transpose() * KL.transpose()) / in.alpha_t;  // r x l
  const Matrix M = (in.graph_factor.transpose() * in.kernel * in.graph_factor) / in.alpha_t;
  Matrix S = Matrix::Identity(M.rows(), M.cols()) + beta_t * M;
  const Matrix Sinv_J = S.ldlt().solve(J);
  return beta_t * (J.transpose() * Sinv_J).trace();
}

// U^2 = alpha_t^-1 Tr(K_ll) - Delta(beta_t).
inline double rademacher_u2(const BoundInputs& in) {
  detail::check_bound_inputs(in);
  const double base = in.kernel.topLeftCorner(in.labeled, in.labeled).trace() / in.alpha_t;
  return base - delta_beta(in, in.beta_t);
}

// Bracket around the empirical Rademacher complexity:
// U/(2^(1/4) l) <= R_hat <= U/l.
inline std::pair<double, double> rademacher_bracket(double u2, Index l) {
  const double u = std::sqrt(std::max(0.0, u2));
  const double upper = u / static_cast<double>(l);
  return {upper / std::pow(2.0, 0.25), upper};
}

// lim_{beta -> inf} Delta(beta) = Tr(J^T M^-1 J); M must be invertible.
inline double delta_beta_limit(const BoundInputs& in) {
  detail::check_bound_inputs(in);
  const Index l = in.labeled;
  const Matrix KL = in.kernel.topRows(l);
  const Matrix J = (in.graph_factor.transpose() * KL.transpose()) / in.alpha_t;
  const Matrix M = (in.graph_factor.transpose() * in.kernel * in.graph_factor) / in.alpha_t;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (eig.info() != Eigen::Success) throw Error("delta_beta_limit: eigensolver failed");
  const double lmax = eig.eigenvalues().maxCoeff();
  if (lmax <= 0 || eig.eigenvalues().minCoeff() < 1e-12 * lmax) {
    throw Error("limit undefined; M rank-deficient");
  }
  return (J.transpose() * M.ldlt().solve(J)).trace();
}

// Factor a PSD Laplacian as L = G_f G_f^T via its eigendecomposition with
// eigenvalues clamped at zero.
inline Matrix laplacian_factor(const Matrix& L) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
  if (eig.info() != Eigen::Success) throw Error("laplacian_factor: eigensolver failed");
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

// Assemble BoundInputs for a batch: Gaussian kernel over rows (median-distance
// width), rows permuted labeled-first, Laplacian permuted accordingly.
inline BoundInputs make_bound_inputs(const Matrix& features,
                                     const std::vector<Index>& labeled_idx,
                                     const Matrix& laplacian, double alpha_t,
                                     double beta_t) {
  const Index n = features.rows();
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<char> is_lab(static_cast<std::size_t>(n), 0);
  for (Index i : labeled_idx) {
    order.push_back(i);
    is_lab[static_cast<std::size_t>(i)] = 1;
  }
  for (Index i = 0; i < n; ++i)
    if (!is_lab[static_cast<std::size_t>(i)]) order.push_back(i);

  Matrix dist(n, n);
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index a = 0; a < n; ++a) {
    dist(a, a) = 0;
    for (Index b = a + 1; b < n; ++b) {
      const double dd = (features.row(order[static_cast<std::size_t>(a)]) -
                         features.row(order[static_cast<std::size_t>(b)]))
                            .norm();
      dist(a, b) = dd;
      dist(b, a) = dd;
      pooled.push_back(dd);
    }
  }
  double width = 1.0;
  if (!pooled.empty()) {
    auto mid = pooled.begin() + static_cast<long>(pooled.size() / 2);
    std::nth_element(pooled.begin(), mid, pooled.end());
    width = *mid > 0 ? *mid : 1.0;
  }

  BoundInputs in;
  in.kernel = (-dist.array().square() / (2.0 * width * width)).exp();
  in.labeled = static_cast<Index>(labeled_idx.size());
  Matrix Lperm(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      Lperm(a, b) = laplacian(order[static_cast<std::size_t>(a)],
                              order[static_cast<std::size_t>(b)]);
  in.graph_factor = laplacian_factor(Lperm);
  in.alpha_t = alpha_t;
  in.beta_t = beta_t;
  return in;
}

// Discretized trajectory length: per class column the sum of step norms; the
// Delta-t factors cancel against the difference quotients.
struct TrajectoryLength {
  Vector per_class;
  double total = 0;
};

inline TrajectoryLength trajectory_length(const std::vector<LinearModel>& models,
                                          const std::vector<double>& times) {
  if (models.size() != times.size()) {
    throw Error("trajectory_length: models/times length mismatch");
  }
  if (models.empty()) throw Error("trajectory_length: empty trajectory");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw Error("trajectory_length: times must be strictly increasing");
    }
  }
  const Index C = models.front().weights.cols();
  TrajectoryLength out;
  out.per_class = Vector::Zero(C);
  for (std::size_t k = 1; k < models.size(); ++k) {
    if (models[k].weights.rows() != models.front().weights.rows() ||
        models[k].weights.cols() != C) {
      throw Error("trajectory_length: inconsistent model shapes");
    }
    for (Index j = 0; j < C; ++j) {
      out.per_class[j] += (models[k].weights.col(j) - models[k - 1].weights.col(j)).norm();
    }
  }
  out.total = out.per_class.sum();
  return out;
}

// Reporting-only concentration tail 3B sqrt(log(1/delta) / (2 l)) of the
// generalization bound.
inline double concentration_tail(double b, double delta, Index l) {
  if (delta <= 0 || delta >= 1 || l < 1) throw Error("concentration_tail: bad arguments");
  return 3.0 * b * std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(l)));
}

}  // namespace dal
