#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dal/common.hpp"
#include "dal/dataio.hpp"
#include "dal/diagnostics.hpp"
#include "dal/efmdi.hpp"
#include "dal/manifold.hpp"
#include "dal/model.hpp"
#include "dal/transport.hpp"

namespace dal {

enum class LossKind { ls, cel };
enum class Variant { dal, ls_ot, ls_g, ridge };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::dal: return "dal";
    case Variant::ls_ot: return "ls_ot";
    case Variant::ls_g: return "ls_g";
    case Variant::ridge: return "ridge";
  }
  return "?";
}

struct SolverConfig {
  LossKind loss = LossKind::ls;
  double alpha = 1.0;
  double beta = 0.1;
  double step0 = 0.1;
  double shrink = 0.5;
  int max_iter = 1000;
  double obj_tol = 1e-6;
  int knn_k = 10;
  EncodingMethod efmdi = EncodingMethod::kme;
  double epsilon = 1e-2;  // entropic strength on max-normalized costs
  int sinkhorn_max_iter = 5000;
  double sinkhorn_tol = 1e-9;
  bool cel_bias_augment = false;  // constant-feature augmentation, off by default
  double bound_b = 10.0;          // reporting-only tail constants
  double bound_delta = 0.05;

  void validate() const {
    if (alpha < 0) throw ConfigError("solver.alpha must be >= 0");
    if (beta < 0) throw ConfigError("solver.beta must be >= 0");
    if (step0 <= 0) throw ConfigError("solver.step0 must be > 0");
    if (shrink <= 0 || shrink >= 1) throw ConfigError("solver.shrink must be in (0,1)");
    if (max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
    if (obj_tol <= 0) throw ConfigError("solver.obj_tol must be > 0");
    if (knn_k < 1) throw ConfigError("solver.knn_k must be >= 1");
    if (epsilon <= 0) throw ConfigError("solver.epsilon must be > 0");
  }
};

struct FitResult {
  LinearModel model;
  std::vector<double> objective_trace;  // initial value then accepted steps
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline Matrix labeled_rows(const TaskBatch& batch) {
  Matrix X(static_cast<Index>(batch.labeled_idx.size()), batch.features.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    X.row(r) = batch.features.row(batch.labeled_idx[static_cast<std::size_t>(r)]);
  }
  return X;
}

inline void check_onehot(const Matrix& y) {
  for (Index i = 0; i < y.rows(); ++i) {
    double s = 0;
    for (Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) != 0.0 && y(i, j) != 1.0) throw Error("labels must be one-hot");
      s += y(i, j);
    }
    if (s != 1.0) throw Error("one-hot row " + std::to_string(i) + " does not sum to 1");
  }
}

// Solve A W = B for symmetric positive semidefinite A; one 1e-10 jitter retry.
inline Matrix solve_spd(Matrix A, const Matrix& B) {
  Eigen::LDLT<Matrix> ldlt(A);
  Matrix W = ldlt.solve(B);
  double rel = (A * W - B).norm() / std::max(1.0, B.norm());
  if (ldlt.info() != Eigen::Success || !W.allFinite() || rel > 1e-6) {
    A.diagonal().array() += 1e-10;
    ldlt.compute(A);
    W = ldlt.solve(B);
    rel = (A * W - B).norm() / std::max(1.0, B.norm());
    if (ldlt.info() != Eigen::Success || !W.allFinite() || rel > 1e-6) {
      throw Error("singular system in least-squares solve");
    }
  }
  return W;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DAL-LS (closed form)
// ---------------------------------------------------------------------------

// LS objective value: ||H(X_l W - Y)||_F^2 + alpha ||W - W_bar||_F^2
//                     + beta Tr(W^T X^T G X W)
inline double ls_objective(const Matrix& Xl, const Matrix& Y, const Matrix& X,
                           const Laplacian& lap, double alpha, double beta,
                           const Matrix* prior_w, const Matrix& W) {
  Matrix R = Xl * W - Y;
  R.rowwise() -= R.colwise().mean();
  double obj = R.squaredNorm();
  if (prior_w)
    obj += alpha * (W - *prior_w).squaredNorm();
  else
    obj += alpha * W.squaredNorm();
  if (beta != 0) obj += beta * (W.transpose() * X.transpose() * lap.matrix * X * W).trace();
  return obj;
}

// Closed-form DAL-LS fit. `prior` and `plan` must be given together; the
// transported prior is d*T*W_prev. Without a prior the alpha term is plain
// ridge shrinkage toward zero.
inline FitResult fit_dal_ls(const TaskBatch& batch, const LinearModel* prior,
                            const TransportPlan* plan, const Laplacian& lap,
                            const SolverConfig& cfg) {
  if ((prior == nullptr) != (plan == nullptr)) {
    throw Error("fit_dal_ls: prior and plan must be given together");
  }
  if (batch.labeled_idx.empty()) throw Error("fit_dal_ls: batch has no labeled rows");
  detail::check_onehot(batch.labels_onehot);

  const Matrix& X = batch.features;
  const Matrix Xl = detail::labeled_rows(batch);
  const Matrix& Y = batch.labels_onehot;
  const auto l = static_cast<double>(Xl.rows());

  std::optional<Matrix> prior_w;
  if (prior) prior_w = transport_model(*plan, *prior).weights;

  Matrix Xlc = Xl.rowwise() - Xl.colwise().mean();  // H X_l
  Matrix A = Xlc.transpose() * Xlc;
  A.diagonal().array() += cfg.alpha;
  if (cfg.beta != 0) A += cfg.beta * (X.transpose() * lap.matrix * X);
  Matrix B = Xlc.transpose() * Y;
  if (prior_w) B += cfg.alpha * *prior_w;

  FitResult res;
  res.model.weights = detail::solve_spd(std::move(A), B);
  res.model.bias = (Y - Xl * res.model.weights).colwise().sum().transpose() / l;
  res.iterations = 1;
  res.converged = true;
  res.objective_trace = {ls_objective(Xl, Y, X, lap, cfg.alpha, cfg.beta,
                                      prior_w ? &*prior_w : nullptr, res.model.weights)};
  return res;
}

// ---------------------------------------------------------------------------
// DAL-CEL (gradient descent with shrinking step)
// ---------------------------------------------------------------------------

namespace detail {

struct CelObjective {
  const Matrix& Xl;
  const Matrix& Y;
  Matrix XGX;  // beta-weighted X^T G X, or empty
  double alpha;
  double beta;
  const Matrix* prior_w;

  double value(const Matrix& W) const {
    const Matrix P = softmax_rows(Xl * W);
    double ce = 0;
    for (Index i = 0; i < Y.rows(); ++i)
      for (Index j = 0; j < Y.cols(); ++j)
        if (Y(i, j) != 0) ce -= std::log(std::max(P(i, j), 1e-300));
    double obj = ce;
    obj += prior_w ? alpha * (W - *prior_w).squaredNorm() : alpha * W.squaredNorm();
    if (beta != 0) obj += (W.transpose() * XGX * W).trace();
    return obj;
  }

  Matrix gradient(const Matrix& W) const {
    const Matrix P = softmax_rows(Xl * W);
    Matrix g = Xl.transpose() * (P - Y);
    if (prior_w)
      g += 2.0 * alpha * (W - *prior_w);
    else
      g += 2.0 * alpha * W;
    if (beta != 0) g += 2.0 * XGX * W;
    return g;
  }
};

}  // namespace detail

// Gradient-descent DAL-CEL fit. Starts at the transported prior (or zero),
// rejects non-decreasing steps, shrinking the step size persistently; stops
// when the objective change drops below obj_tol or at max_iter.
inline FitResult fit_dal_cel(const TaskBatch& batch, const LinearModel* prior,
                             const TransportPlan* plan, const Laplacian& lap,
                             const SolverConfig& cfg) {
  if ((prior == nullptr) != (plan == nullptr)) {
    throw Error("fit_dal_cel: prior and plan must be given together");
  }
  if (batch.labeled_idx.empty()) throw Error("fit_dal_cel: batch has no labeled rows");
  detail::check_onehot(batch.labels_onehot);

  Matrix X = batch.features;
  Matrix Xl = detail::labeled_rows(batch);
  const Matrix& Y = batch.labels_onehot;

  std::optional<Matrix> prior_w;
  if (prior) prior_w = transport_model(*plan, *prior).weights;

  if (cfg.cel_bias_augment) {
    X.conservativeResize(Eigen::NoChange, X.cols() + 1);
    X.col(X.cols() - 1).setOnes();
    Xl.conservativeResize(Eigen::NoChange, Xl.cols() + 1);
    Xl.col(Xl.cols() - 1).setOnes();
    if (prior_w) {
      prior_w->conservativeResize(prior_w->rows() + 1, Eigen::NoChange);
      prior_w->row(prior_w->rows() - 1).setZero();
    }
  }

  detail::CelObjective obj{Xl, Y, {}, cfg.alpha, cfg.beta,
                           prior_w ? &*prior_w : nullptr};
  if (cfg.beta != 0) obj.XGX = cfg.beta * (X.transpose() * lap.matrix * X);

  Matrix W = prior_w ? *prior_w : Matrix::Zero(X.cols(), Y.cols());
  double J = obj.value(W);
  if (!std::isfinite(J)) throw Error("fit_dal_cel: non-finite objective at iteration 0");

  FitResult res;
  res.objective_trace.push_back(J);
  double step = cfg.step0;
  const double step_floor = 1e-18 * cfg.step0;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Matrix g = obj.gradient(W);
    Matrix Wn;
    double Jn = J;
    bool accepted = false;
    while (step >= step_floor) {
      Wn = W - step * g;
      Jn = obj.value(Wn);
      if (!std::isfinite(Jn)) {
        throw Error("fit_dal_cel: non-finite objective at iteration " + std::to_string(it));
      }
      if (Jn < J) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted) {  // no double-precision descent step remains
      res.converged = true;
      break;
    }
    res.iterations = it;
    const double dj = J - Jn;
    W = std::move(Wn);
    J = Jn;
    res.objective_trace.push_back(J);
    if (dj < cfg.obj_tol) {
      res.converged = true;
      break;
    }
  }

  if (cfg.cel_bias_augment) {
    res.model.weights = W.topRows(W.rows() - 1);
    res.model.bias = W.row(W.rows() - 1).transpose();
  } else {
    res.model.weights = std::move(W);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Ridge baseline
// ---------------------------------------------------------------------------

// Multi-class ridge regression on one-hot targets with centering and intercept.
inline LinearModel fit_ridge(const Matrix& Xl, const Matrix& Y, double alpha) {
  if (Xl.rows() != Y.rows() || Xl.rows() == 0) throw Error("fit_ridge: bad shapes");
  const Matrix Xc = Xl.rowwise() - Xl.colwise().mean();
  Matrix A = Xc.transpose() * Xc;
  A.diagonal().array() += alpha;
  LinearModel model;
  model.weights = detail::solve_spd(std::move(A), Xc.transpose() * Y);
  model.bias = (Y - Xl * model.weights).colwise().mean().transpose();
  return model;
}

// 5-fold cross-validated ridge alpha over 10^{-3..3}; ties prefer the
// smaller alpha.
inline double cross_validate_ridge_alpha(const Matrix& X, const Matrix& Y,
                                         std::uint64_t seed) {
  const Index n = X.rows();
  const int folds = 5;
  if (n < folds) throw Error("cross_validate_ridge_alpha: need at least 5 rows");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto rng = make_rng(seed, 0xCF01);
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<int> truth(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = argmax_row(Y.row(i));

  double best_alpha = 1e-3;
  double best_acc = -1;
  for (int e = -3; e <= 3; ++e) {
    const double alpha = std::pow(10.0, e);
    long correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> tr, te;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        (static_cast<int>(i % folds) == f ? te : tr).push_back(idx[i]);
      }
      if (te.empty() || tr.empty()) continue;
      Matrix Xtr(static_cast<Index>(tr.size()), X.cols()), Ytr(static_cast<Index>(tr.size()), Y.cols());
      for (Index r = 0; r < Xtr.rows(); ++r) {
        Xtr.row(r) = X.row(tr[static_cast<std::size_t>(r)]);
        Ytr.row(r) = Y.row(tr[static_cast<std::size_t>(r)]);
      }
      const LinearModel m = fit_ridge(Xtr, Ytr, alpha);
      for (Index j : te) {
        Eigen::RowVectorXd score = X.row(j) * m.weights + m.bias.transpose();
        if (argmax_row(score) == truth[static_cast<std::size_t>(j)]) ++correct;
        ++total;
      }
    }
    const double acc = total > 0 ? static_cast<double>(correct) / total : 0.0;
    if (acc > best_acc) {
      best_acc = acc;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

// ---------------------------------------------------------------------------
// Task flow
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string variant;
  std::uint64_t seed = 0;
  int task = 0;
  double accuracy = 0;
  int labeled_count = 0;
  int iterations = 0;
  bool converged = false;
  double final_objective = 0;
  double u2 = 0;                     // Rademacher-complexity bound quantity
  double u2_lower = 0, u2_upper = 0; // bracket [U/(2^(1/4) l), U/l] around R_hat
  double trajectory_increment = 0;
  double prior_labeled_risk = 0;     // floored mean labeled loss of the prior
  double feature_radius = 0;         // max labeled-row norm
  double bound_tail = 0;             // 3B sqrt(log(1/delta)/2l), reporting-only
  double wall_ms = 0;
  std::vector<double> objective_trace;  // written as trace CSVs, not JSONL
};

namespace detail {

inline double accuracy_on(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<Index>& rows) {
  if (rows.empty()) return 0.0;
  long ok = 0;
  for (Index r : rows) {
    if (pred[static_cast<std::size_t>(r)] == truth[static_cast<std::size_t>(r)]) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

// Mean labeled-set loss of a model under the configured loss; floored at 1e-8.
inline double prior_labeled_risk(const Matrix& Xl, const Matrix& Y, const Matrix& W,
                                 LossKind loss) {
  double risk = 0;
  if (loss == LossKind::ls) {
    Matrix R = Xl * W - Y;
    R.rowwise() -= R.colwise().mean();
    risk = R.squaredNorm() / static_cast<double>(Xl.rows());
  } else {
    const Matrix P = softmax_rows(Xl * W);
    for (Index i = 0; i < Y.rows(); ++i)
      for (Index j = 0; j < Y.cols(); ++j)
        if (Y(i, j) != 0) risk -= std::log(std::max(P(i, j), 1e-300));
    risk /= static_cast<double>(Xl.rows());
  }
  return std::max(risk, 1e-8);
}

}  // namespace detail

// Drive one variant across the stream: train the source model on task 0
// (cross-validated ridge), then per task build encodings of the raw features,
// the OT plan on the max-normalized cost, the Laplacian of the standardized
// batch, fit, and evaluate on the unlabeled rows.
inline std::vector<RunRecord> run_task_flow(const TaskStream& stream,
                                            const SolverConfig& cfg, Variant variant,
                                            std::uint64_t seed) {
  cfg.validate();
  if (stream.batches.size() < 2) throw Error("run_task_flow: stream needs >= 2 batches");
  const TaskBatch& b0 = stream.batches.front();
  if (static_cast<Index>(b0.labeled_idx.size()) != b0.features.rows()) {
    throw Error("run_task_flow: task 0 must be fully labeled");
  }

  const Standardizer stdz = Standardizer::fit(b0.features);
  const int C = stream.class_count;
  const Index d = b0.features.cols();

  // source model: cross-validated ridge on the initiation batch
  const Matrix X0 = stdz.apply(b0.features);
  const double alpha_cv = cross_validate_ridge_alpha(X0, b0.labels_onehot, seed);
  LinearModel prev = fit_ridge(X0, b0.labels_onehot, alpha_cv);

  std::vector<RunRecord> records;
  for (std::size_t t = 1; t < stream.batches.size(); ++t) {
    const auto started = std::chrono::steady_clock::now();
    const TaskBatch& raw = stream.batches[t];
    try {
      TaskBatch batch = raw;  // standardized shadow for solving
      batch.features = stdz.apply(raw.features);

      const int k = std::min<int>(cfg.knn_k, static_cast<int>(batch.features.rows()) - 1);
      const Laplacian lap = build_laplacian(batch.features, k);

      const bool wants_prior = variant == Variant::dal || variant == Variant::ls_ot;
      std::optional<TransportPlan> plan;
      if (wants_prior) {
        const FeatureEncoding cur = encode(raw, cfg.efmdi);
        const FeatureEncoding prv = encode(stream.batches[t - 1], cfg.efmdi);
        CostMatrix cost = cfg.efmdi == EncodingMethod::kme ? cost_kme(cur, prv)
                                                           : cost_kde(cur, prv);
        const double cmax = cost.values.maxCoeff();
        if (cmax > 0) cost.values /= cmax;
        plan = sinkhorn_uniform(cost, cfg.epsilon, cfg.sinkhorn_max_iter, cfg.sinkhorn_tol);
        plan->cost_normalization = cmax > 0 ? cmax : 1.0;
      }

      SolverConfig fit_cfg = cfg;
      FitResult fit;
      double alpha_eff = cfg.alpha;
      double beta_eff = cfg.beta;
      switch (variant) {
        case Variant::dal:
          fit = cfg.loss == LossKind::ls ? fit_dal_ls(batch, &prev, &*plan, lap, fit_cfg)
                                         : fit_dal_cel(batch, &prev, &*plan, lap, fit_cfg);
          break;
        case Variant::ls_ot:
          fit_cfg.beta = 0;
          beta_eff = 0;
          fit = cfg.loss == LossKind::ls ? fit_dal_ls(batch, &prev, &*plan, lap, fit_cfg)
                                         : fit_dal_cel(batch, &prev, &*plan, lap, fit_cfg);
          break;
        case Variant::ls_g:
          fit = cfg.loss == LossKind::ls ? fit_dal_ls(batch, nullptr, nullptr, lap, fit_cfg)
                                         : fit_dal_cel(batch, nullptr, nullptr, lap, fit_cfg);
          break;
        case Variant::ridge: {
          fit.model = fit_ridge(detail::labeled_rows(batch), batch.labels_onehot, alpha_cv);
          fit.iterations = 1;
          fit.converged = true;
          fit.objective_trace = {0.0};
          alpha_eff = alpha_cv;
          beta_eff = 0;
          break;
        }
      }

      RunRecord rec;
      rec.variant = to_string(variant);
      rec.seed = seed;
      rec.task = static_cast<int>(t);
      rec.labeled_count = static_cast<int>(raw.labeled_idx.size());
      rec.iterations = fit.iterations;
      rec.converged = fit.converged;
      rec.final_objective = fit.objective_trace.empty() ? 0 : fit.objective_trace.back();

      // accuracy on the unlabeled rows against sealed truth
      std::vector<Index> unlabeled;
      {
        std::vector<char> is_lab(static_cast<std::size_t>(batch.features.rows()), 0);
        for (Index i : raw.labeled_idx) is_lab[static_cast<std::size_t>(i)] = 1;
        for (Index i = 0; i < batch.features.rows(); ++i)
          if (!is_lab[static_cast<std::size_t>(i)]) unlabeled.push_back(i);
        if (unlabeled.empty()) {  // fully labeled batch: fall back to all rows
          unlabeled.resize(static_cast<std::size_t>(batch.features.rows()));
          std::iota(unlabeled.begin(), unlabeled.end(), Index{0});
        }
      }
      const std::vector<int> pred = predict(fit.model, batch.features);
      rec.accuracy = detail::accuracy_on(pred, stream.truth.batch(t), unlabeled);

      // generalization-bound diagnostics
      {
        const Matrix Xl = detail::labeled_rows(batch);
        const Matrix prior_w = wants_prior ? transport_model(*plan, prev).weights
                                           : Matrix::Zero(d, C);
        rec.prior_labeled_risk = detail::prior_labeled_risk(Xl, raw.labels_onehot,
                                                            prior_w, cfg.loss);
        rec.feature_radius = Xl.rows() > 0 ? Xl.rowwise().norm().maxCoeff() : 0.0;
        const auto l = static_cast<double>(Xl.rows());
        rec.bound_tail = 3.0 * cfg.bound_b *
                         std::sqrt(std::log(1.0 / cfg.bound_delta) / (2.0 * l));

        BoundInputs bi = make_bound_inputs(batch.features, raw.labeled_idx, lap.matrix,
                                           C * alpha_eff / rec.prior_labeled_risk,
                                           C * beta_eff / rec.prior_labeled_risk);
        rec.u2 = rademacher_u2(bi);
        const auto bracket = rademacher_bracket(rec.u2, static_cast<Index>(Xl.rows()));
        rec.u2_lower = bracket.first;
        rec.u2_upper = bracket.second;
      }

      rec.trajectory_increment =
          trajectory_length({prev, fit.model}, {0.0, 1.0}).total;
      rec.objective_trace = fit.objective_trace;

      prev = fit.model;
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started)
                        .count();
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      throw Error("task " + std::to_string(t) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace dal
