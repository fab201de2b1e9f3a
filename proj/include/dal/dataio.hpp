#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dal/common.hpp"

namespace dal {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Dataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // dense ids in [0, class_count)
  int class_count = 0;

  Index n() const { return features.rows(); }
  Index d() const { return features.cols(); }
};

// One stream step. Ground-truth labels for unlabeled rows are NOT here; they
// travel in TaskStream::truth, which only evaluation code reads.
struct TaskBatch {
  int index = 0;
  Matrix features;                  // n_t x d
  std::vector<Index> labeled_idx;   // sorted, unique, in range
  Matrix labels_onehot;             // |labeled_idx| x C, one 1 per row
};

// Sealed evaluation side-channel: per-batch ground truth.
class EvalLabels {
 public:
  explicit EvalLabels(std::vector<std::vector<int>> per_batch = {})
      : per_batch_(std::move(per_batch)) {}
  const std::vector<int>& batch(std::size_t t) const { return per_batch_.at(t); }
  std::size_t size() const { return per_batch_.size(); }

 private:
  std::vector<std::vector<int>> per_batch_;
};

struct TaskStream {
  std::vector<TaskBatch> batches;
  EvalLabels truth;
  int class_count = 0;
};

struct StreamSpec {
  enum class Mode { csv_split, mixture, toy };

  Mode mode = Mode::toy;
  int task_count = 4;  // evolving tasks; the stream emits task_count+1 batches
  double labeled_fraction = 0.01;
  double task0_size_multiplier = 2.0;
  std::uint64_t seed = 1;
  std::vector<double> schedule;  // mixture lambdas, one per batch; empty = linspace

  // toy / mixture batch sizing
  int samples_per_task = 150;

  // toy generator geometry
  double rotation_deg = 30.0;
  double separation = 2.0;
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace detail

using LabelColumn = std::variant<int, std::string>;

// Reads a comma-separated file into a Dataset. Labels are re-indexed to dense
// ids in order of first appearance. Feature column order is preserved.
inline Dataset load_csv(const std::string& path, const LabelColumn& label_column,
                        bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open '" + path + "'");

  std::string line;
  std::vector<std::string> header;
  int label_col = -1;

  if (has_header) {
    if (!std::getline(in, line)) throw Error("load_csv: empty dataset in '" + path + "'");
    header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);
  }

  if (std::holds_alternative<std::string>(label_column)) {
    if (!has_header) {
      throw Error("load_csv: label column named '" +
                  std::get<std::string>(label_column) +
                  "' requires a header row");
    }
    const auto& name = std::get<std::string>(label_column);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error("load_csv: label column '" + name + "' not found in header");
    }
    label_col = static_cast<int>(it - header.begin());
  } else {
    label_col = std::get<int>(label_column);
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::map<std::string, int> label_ids;  // first-appearance order via insertion count
  std::vector<int> order;                // label id by first appearance
  int ncols = has_header ? static_cast<int>(header.size()) : -1;
  int lineno = has_header ? 1 : 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (ncols < 0) ncols = static_cast<int>(cells.size());
    if (static_cast<int>(cells.size()) != ncols) {
      throw Error("load_csv: row " + std::to_string(lineno) + " has " +
                  std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(ncols));
    }
    if (label_col < 0 || label_col >= ncols) {
      throw Error("load_csv: label column index " + std::to_string(label_col) +
                  " out of range for " + std::to_string(ncols) + " columns");
    }
    std::vector<double> feat;
    feat.reserve(static_cast<std::size_t>(ncols) - 1);
    for (int c = 0; c < ncols; ++c) {
      const std::string cell = detail::trim(cells[static_cast<std::size_t>(c)]);
      if (c == label_col) {
        auto [it, inserted] = label_ids.try_emplace(cell, static_cast<int>(label_ids.size()));
        labels.push_back(it->second);
        continue;
      }
      double v = 0;
      try {
        std::size_t pos = 0;
        v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error("load_csv: row " + std::to_string(lineno) + ", column " +
                    std::to_string(c) + ": cannot parse '" + cell + "' as a real");
      }
      if (!std::isfinite(v)) {
        throw Error("load_csv: row " + std::to_string(lineno) + ", column " +
                    std::to_string(c) + ": non-finite value '" + cell + "'");
      }
      feat.push_back(v);
    }
    rows.push_back(std::move(feat));
  }

  if (rows.empty()) throw Error("load_csv: empty dataset in '" + path + "'");
  if (label_ids.size() < 2) throw Error("load_csv: single-class dataset in '" + path + "'");

  Dataset ds;
  ds.class_count = static_cast<int>(label_ids.size());
  ds.labels = std::move(labels);
  ds.features.resize(static_cast<Index>(rows.size()),
                     static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Label masking
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix onehot(const std::vector<int>& labels, const std::vector<Index>& idx,
                     int class_count) {
  Matrix y = Matrix::Zero(static_cast<Index>(idx.size()), class_count);
  for (Index r = 0; r < y.rows(); ++r) {
    y(r, labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])]) = 1.0;
  }
  return y;
}

// Stratified labeled subset: per present class, max(1, round(fraction * count))
// rows, drawn without replacement.
inline std::vector<Index> stratified_mask(const std::vector<int>& labels,
                                          int class_count, double fraction,
                                          std::mt19937_64& rng) {
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  }
  std::vector<Index> picked;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    auto want = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(fraction * static_cast<double>(members.size()))));
    want = std::min(want, members.size());
    std::shuffle(members.begin(), members.end(), rng);
    picked.insert(picked.end(), members.begin(), members.begin() + static_cast<long>(want));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

inline TaskBatch make_batch(int index, Matrix features, const std::vector<int>& labels,
                            int class_count, double fraction, bool fully_labeled,
                            std::mt19937_64& rng) {
  TaskBatch b;
  b.index = index;
  b.features = std::move(features);
  if (fully_labeled || fraction >= 1.0) {
    b.labeled_idx.resize(static_cast<std::size_t>(b.features.rows()));
    std::iota(b.labeled_idx.begin(), b.labeled_idx.end(), Index{0});
  } else {
    b.labeled_idx = stratified_mask(labels, class_count, fraction, rng);
  }
  b.labels_onehot = onehot(labels, b.labeled_idx, class_count);
  return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stream builders
// ---------------------------------------------------------------------------

// Partition in arrival order. Task 0 gets ceil(m*n / (T+m)) rows (m = task-0
// multiplier), the remainder splits evenly over tasks 1..T.
inline TaskStream split_by_arrival(const Dataset& ds, const StreamSpec& spec) {
  if (spec.mode != StreamSpec::Mode::csv_split) {
    throw Error("split_by_arrival: spec.mode must be csv_split");
  }
  const Index n = ds.n();
  const int T = spec.task_count;
  if (T < 1) throw Error("split_by_arrival: task_count must be >= 1");
  const double m = spec.task0_size_multiplier;
  auto n0 = static_cast<Index>(
      std::ceil(m * static_cast<double>(n) / (static_cast<double>(T) + m)));
  n0 = std::min(n0, n);
  const Index rem = n - n0;
  std::vector<Index> sizes{n0};
  for (int t = 1; t <= T; ++t) {
    Index sz = rem / T + (t <= static_cast<int>(rem % T) ? 1 : 0);
    sizes.push_back(sz);
  }
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (sizes[t] <= 0) {
      throw Error("split_by_arrival: task " + std::to_string(t) +
                  " would receive no rows (too few samples for " +
                  std::to_string(T) + " tasks)");
    }
  }

  auto rng = make_rng(spec.seed, 0xD5A1);
  TaskStream stream;
  stream.class_count = ds.class_count;
  std::vector<std::vector<int>> truth;
  Index offset = 0;
  for (int t = 0; t < static_cast<int>(sizes.size()); ++t) {
    const Index sz = sizes[static_cast<std::size_t>(t)];
    Matrix feats = ds.features.middleRows(offset, sz);
    std::vector<int> labels(ds.labels.begin() + offset, ds.labels.begin() + offset + sz);
    // every class present in the batch must be coverable with >=1 labeled row
    stream.batches.push_back(detail::make_batch(t, std::move(feats), labels,
                                                ds.class_count, spec.labeled_fraction,
                                                t == 0, rng));
    truth.push_back(std::move(labels));
    offset += sz;
  }
  stream.truth = EvalLabels(std::move(truth));
  return stream;
}

// Mixture stream per the time-dependent proportion schedule: batch t draws each
// row from the target pool with probability lambda(t), else from the source
// pool, without replacement within each pool.
inline TaskStream sample_mixture_stream(const Dataset& source, const Dataset& target,
                                        const StreamSpec& spec) {
  if (spec.mode != StreamSpec::Mode::mixture) {
    throw Error("sample_mixture_stream: spec.mode must be mixture");
  }
  if (source.d() != target.d()) {
    throw Error("sample_mixture_stream: dimension mismatch (source d=" +
                std::to_string(source.d()) + ", target d=" + std::to_string(target.d()) + ")");
  }
  if (source.class_count != target.class_count) {
    throw Error("sample_mixture_stream: source/target class sets differ");
  }
  const int T = spec.task_count;
  std::vector<double> lam = spec.schedule;
  if (lam.empty()) {
    for (int t = 0; t <= T; ++t) lam.push_back(static_cast<double>(t) / T);
  }
  if (static_cast<int>(lam.size()) != T + 1) {
    throw Error("sample_mixture_stream: schedule must have task_count+1 entries");
  }
  if (lam.front() != 0.0 || lam.back() != 1.0 ||
      !std::is_sorted(lam.begin(), lam.end())) {
    throw Error("sample_mixture_stream: schedule must be nondecreasing with "
                "lambda(0)=0 and lambda(last)=1");
  }

  auto rng = make_rng(spec.seed, 0x31C7);
  std::vector<Index> src_pool(static_cast<std::size_t>(source.n()));
  std::vector<Index> tgt_pool(static_cast<std::size_t>(target.n()));
  std::iota(src_pool.begin(), src_pool.end(), Index{0});
  std::iota(tgt_pool.begin(), tgt_pool.end(), Index{0});
  std::shuffle(src_pool.begin(), src_pool.end(), rng);
  std::shuffle(tgt_pool.begin(), tgt_pool.end(), rng);
  std::size_t src_cursor = 0, tgt_cursor = 0;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TaskStream stream;
  stream.class_count = source.class_count;
  std::vector<std::vector<int>> truth;

  for (int t = 0; t <= T; ++t) {
    const Index nt = (t == 0)
        ? static_cast<Index>(std::llround(spec.task0_size_multiplier * spec.samples_per_task))
        : static_cast<Index>(spec.samples_per_task);
    Matrix feats(nt, source.d());
    std::vector<int> labels(static_cast<std::size_t>(nt));
    for (Index i = 0; i < nt; ++i) {
      const bool from_target = unif(rng) < lam[static_cast<std::size_t>(t)];
      if (from_target) {
        if (tgt_cursor >= tgt_pool.size()) {
          throw Error("sample_mixture_stream: target pool exhausted at task " +
                      std::to_string(t));
        }
        const Index r = tgt_pool[tgt_cursor++];
        feats.row(i) = target.features.row(r);
        labels[static_cast<std::size_t>(i)] = target.labels[static_cast<std::size_t>(r)];
      } else {
        if (src_cursor >= src_pool.size()) {
          throw Error("sample_mixture_stream: source pool exhausted at task " +
                      std::to_string(t));
        }
        const Index r = src_pool[src_cursor++];
        feats.row(i) = source.features.row(r);
        labels[static_cast<std::size_t>(i)] = source.labels[static_cast<std::size_t>(r)];
      }
    }
    stream.batches.push_back(detail::make_batch(t, std::move(feats), labels,
                                                source.class_count,
                                                spec.labeled_fraction, t == 0, rng));
    truth.push_back(std::move(labels));
  }
  stream.truth = EvalLabels(std::move(truth));
  return stream;
}

// Two-class 2-D Gaussian stream whose class means rotate about the origin by a
// fixed angle per task. Balanced classes, unit covariance.
inline TaskStream gen_toy_stream(const StreamSpec& spec) {
  if (spec.mode != StreamSpec::Mode::toy) {
    throw Error("gen_toy_stream: spec.mode must be toy");
  }
  if (spec.task_count < 1 || spec.samples_per_task < 2) {
    throw Error("gen_toy_stream: need task_count >= 1 and samples_per_task >= 2");
  }
  auto rng = make_rng(spec.seed, 0x70F1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = spec.separation / 2.0;

  TaskStream stream;
  stream.class_count = 2;
  std::vector<std::vector<int>> truth;
  for (int t = 0; t <= spec.task_count; ++t) {
    const Index nt = (t == 0)
        ? static_cast<Index>(std::llround(spec.task0_size_multiplier * spec.samples_per_task))
        : static_cast<Index>(spec.samples_per_task);
    const double theta = spec.rotation_deg * t * M_PI / 180.0;
    const double cx = radius * std::cos(theta);
    const double cy = radius * std::sin(theta);

    std::vector<int> labels(static_cast<std::size_t>(nt));
    for (Index i = 0; i < nt; ++i) labels[static_cast<std::size_t>(i)] = (i < nt / 2) ? 0 : 1;
    std::shuffle(labels.begin(), labels.end(), rng);

    Matrix feats(nt, 2);
    for (Index i = 0; i < nt; ++i) {
      const double sgn = labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
      feats(i, 0) = sgn * cx + normal(rng);
      feats(i, 1) = sgn * cy + normal(rng);
    }
    stream.batches.push_back(detail::make_batch(t, std::move(feats), labels, 2,
                                                spec.labeled_fraction, t == 0, rng));
    truth.push_back(std::move(labels));
  }
  stream.truth = EvalLabels(std::move(truth));
  return stream;
}

// ---------------------------------------------------------------------------
// Standardization (task-0 statistics, frozen across the flow)
// ---------------------------------------------------------------------------

class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const Matrix& features) {
    Standardizer s;
    s.mean_ = features.colwise().mean();
    Vector var = (features.rowwise() - s.mean_.transpose())
                     .array().square().colwise().mean();
    s.scale_ = var.array().sqrt();
    for (Index j = 0; j < s.scale_.size(); ++j) {
      if (s.scale_[j] < 1e-12) s.scale_[j] = 1.0;  // constant feature
    }
    return s;
  }

  Matrix apply(const Matrix& features) const {
    if (features.cols() != mean_.size()) {
      throw Error("Standardizer: feature dimension mismatch");
    }
    return (features.rowwise() - mean_.transpose()).array().rowwise() /
           scale_.transpose().array();
  }

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }

 private:
  Vector mean_, scale_;
};

}  // namespace dal
