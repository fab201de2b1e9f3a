#pragma once

#include <vector>

#include "dal/common.hpp"

namespace dal {

// Linear classifier W (features x classes) with an optional bias vector.
// An empty bias is treated as zero (the CEL path carries no bias).
struct LinearModel {
  Matrix weights;
  Vector bias;

  Index feature_count() const { return weights.rows(); }
  Index class_count() const { return weights.cols(); }
  bool has_bias() const { return bias.size() > 0; }
};

inline Matrix class_scores(const LinearModel& model, const Matrix& features) {
  if (features.cols() != model.weights.rows()) {
    throw Error("class_scores: feature dimension mismatch (" +
                std::to_string(features.cols()) + " vs " +
                std::to_string(model.weights.rows()) + ")");
  }
  Matrix scores = features * model.weights;
  if (model.has_bias()) {
    if (model.bias.size() != model.weights.cols()) {
      throw Error("class_scores: bias length does not match class count");
    }
    scores.rowwise() += model.bias.transpose();
  }
  return scores;
}

// Row-wise softmax, shifted by the row max for stability.
inline Matrix softmax_rows(const Matrix& scores) {
  Matrix probs(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const double mx = scores.row(i).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(i).array() - mx).exp();
    probs.row(i) = e / e.sum();
  }
  return probs;
}

// Argmax class per row; ties break toward the lower class index.
inline std::vector<int> predict(const LinearModel& model, const Matrix& features) {
  const Matrix scores = class_scores(model, features);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax_row(scores.row(i));
  }
  return out;
}

}  // namespace dal
