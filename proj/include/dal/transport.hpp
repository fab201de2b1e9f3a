#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dal/common.hpp"
#include "dal/efmdi.hpp"
#include "dal/model.hpp"

namespace dal {

// Entropic coupling between two feature marginals. `coupling` rows follow the
// current batch's feature indexing, columns the previous batch's. `scale` is
// the feature count d, so scale * coupling * W transports a model.
struct TransportPlan {
  Matrix coupling;
  Vector row_marginal;
  Vector col_marginal;
  double epsilon = 0;
  double scale = 0;
  double cost_normalization = 1.0;  // max-entry factor divided out upstream
  int iterations = 0;
  bool converged = false;
  double marginal_violation = 0;  // scaling-loop violation before rounding
};

namespace detail {

// Projection onto the transport polytope: scale rows then columns down to the
// targets, then spread the leftover mass as a rank-one correction. Marginals
// come out exact to machine precision.
inline void round_to_feasible(Matrix& T, const Vector& mu, const Vector& nu) {
  for (Index i = 0; i < T.rows(); ++i) {
    const double s = T.row(i).sum();
    if (s > mu[i] && s > 0) T.row(i) *= mu[i] / s;
  }
  for (Index j = 0; j < T.cols(); ++j) {
    const double s = T.col(j).sum();
    if (s > nu[j] && s > 0) T.col(j) *= nu[j] / s;
  }
  Vector er = mu - T.rowwise().sum();
  Vector ec = nu - T.colwise().sum().transpose();
  const double s = er.sum();
  if (s > 0) T += er * ec.transpose() / s;
}

}  // namespace detail

// Log-domain Sinkhorn for min <T,C> + eps * sum T_ij (log T_ij - 1) over the
// transport polytope. The pair (C, eps) is internally rescaled by max|C| (the
// argmin is invariant under joint scaling), and epsilon is annealed down a
// factor-5 schedule with warm-started potentials. max_iter bounds the total
// scaling iterations across all stages; converged requires the target epsilon
// stage to terminate under tol. The scaling loop's final marginal violation
// and iteration count are reported; the returned coupling is then rounded
// onto the polytope so the marginal invariant always holds.
inline TransportPlan sinkhorn(const CostMatrix& cost, const Vector& row_marginal,
                              const Vector& col_marginal, double epsilon,
                              int max_iter = 5000, double tol = 1e-9) {
  const Index n = cost.values.rows();
  const Index m = cost.values.cols();
  if (row_marginal.size() != n || col_marginal.size() != m) {
    throw Error("sinkhorn: marginal size does not match cost matrix");
  }
  if (!cost.values.allFinite()) throw Error("sinkhorn: non-finite cost entries");
  if (epsilon <= 0) throw Error("sinkhorn: epsilon must be positive");
  if (max_iter < 1) throw Error("sinkhorn: max_iter must be >= 1");
  auto check_marginal = [](const Vector& v, const char* name) {
    if (v.minCoeff() < 0 || std::abs(v.sum() - 1.0) > 1e-9) {
      throw Error(std::string("sinkhorn: ") + name + " is not a probability vector");
    }
  };
  check_marginal(row_marginal, "row_marginal");
  check_marginal(col_marginal, "col_marginal");

  // joint (C, eps) rescale; preserves the minimizer exactly
  const double cmax = cost.values.cwiseAbs().maxCoeff();
  const double cscale = cmax > 0 ? cmax : 1.0;
  const Matrix C = cost.values / cscale;
  const double eps = epsilon / cscale;

  const Vector logmu = row_marginal.array().max(1e-300).log();
  const Vector lognu = col_marginal.array().max(1e-300).log();
  Vector f = Vector::Zero(n), g = Vector::Zero(m);

  std::vector<double> schedule;
  for (double e = std::max(1.0, eps * 5.0); e > eps; e /= 5.0) schedule.push_back(e);
  schedule.push_back(eps);

  Matrix W(n, m), T(n, m);
  Vector mx_row(n), mx_col(m), row_sums(n), col_sums(m);

  int total_iters = 0;
  int remaining = max_iter;
  const int stage_cap = std::max(1, std::min(1000, max_iter / 10));
  bool finished_final = false;
  double viol = std::numeric_limits<double>::infinity();

  for (std::size_t s = 0; s < schedule.size() && remaining > 0; ++s) {
    const double e = schedule[s];
    const bool last = (s + 1 == schedule.size());
    const int cap = last ? remaining : std::min(remaining, stage_cap);
    const double stage_tol = last ? tol : std::max(tol, 1e-8);
    for (int it = 0; it < cap; ++it) {
      ++total_iters;
      --remaining;
      // f_i = e (logmu_i - LSE_j((g_j - C_ij)/e))
      W = ((-C).rowwise() + g.transpose()) / e;
      mx_row = W.rowwise().maxCoeff();
      f = e * (logmu.array() - mx_row.array() -
               (W.colwise() - mx_row).array().exp().rowwise().sum().log())
              .matrix();
      // g_j = e (lognu_j - LSE_i((f_i - C_ij)/e))
      W = ((-C).colwise() + f) / e;
      mx_col = W.colwise().maxCoeff().transpose();
      g = e * (lognu.array() - mx_col.array() -
               (W.rowwise() - mx_col.transpose()).array().exp().colwise().sum().transpose().log())
              .matrix();

      T = (((((-C).colwise() + f).rowwise() + g.transpose()) / e).array().exp()).matrix();
      row_sums = T.rowwise().sum();
      col_sums = T.colwise().sum().transpose();
      viol = std::max((row_sums - row_marginal).cwiseAbs().maxCoeff(),
                      (col_sums - col_marginal).cwiseAbs().maxCoeff());
      if (viol < stage_tol) {
        if (last) finished_final = true;
        break;
      }
    }
    if (last && viol < tol) finished_final = true;
  }

  TransportPlan plan;
  plan.epsilon = epsilon;
  plan.scale = static_cast<double>(n);
  plan.row_marginal = row_marginal;
  plan.col_marginal = col_marginal;
  plan.iterations = total_iters;
  plan.marginal_violation = viol;
  plan.converged = finished_final;
  detail::round_to_feasible(T, row_marginal, col_marginal);
  // entropic solutions are interior; keep entries strictly positive even where
  // the exponential underflowed
  T = T.cwiseMax(std::numeric_limits<double>::min());
  plan.coupling = std::move(T);
  return plan;
}

inline TransportPlan sinkhorn_uniform(const CostMatrix& cost, double epsilon,
                                      int max_iter = 5000, double tol = 1e-9) {
  const Index d = cost.values.rows();
  Vector u = Vector::Constant(d, 1.0 / static_cast<double>(d));
  Vector v = Vector::Constant(cost.values.cols(),
                              1.0 / static_cast<double>(cost.values.cols()));
  return sinkhorn(cost, u, v, epsilon, max_iter, tol);
}

// Transport the previous model into the current feature indexing:
// W_bar = scale * coupling * W_prev. The bias is copied unchanged.
inline LinearModel transport_model(const TransportPlan& plan, const LinearModel& prev) {
  if (plan.coupling.cols() != prev.weights.rows()) {
    throw Error("transport_model: plan dimension " + std::to_string(plan.coupling.cols()) +
                " does not match model feature count " + std::to_string(prev.weights.rows()));
  }
  LinearModel out;
  out.weights = plan.scale * (plan.coupling * prev.weights);
  out.bias = prev.bias;
  return out;
}

}  // namespace dal
