#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dal/common.hpp"
#include "dal/dataio.hpp"
#include "dal/solvers.hpp"

namespace dal {

struct CsvSource {
  std::string path;
  LabelColumn label_column = 0;
  bool has_header = true;
};

struct ExperimentConfig {
  StreamSpec stream;
  std::optional<CsvSource> csv;         // csv_split mode
  std::optional<CsvSource> source_csv;  // mixture mode
  std::optional<CsvSource> target_csv;
  SolverConfig solver;
  std::vector<Variant> variants{Variant::dal, Variant::ls_ot, Variant::ls_g, Variant::ridge};
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "dal_out";
};

// ---------------------------------------------------------------------------
// Config parsing (strict: unknown keys are rejected, errors carry a JSON
// pointer to the offending field)
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key at " + where + "/" + it.key());
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value at " + where + "/" + key);
  }
}

inline CsvSource parse_csv_source(const json& obj, const std::string& where) {
  reject_unknown_keys(obj, {"path", "label_column", "has_header"}, where);
  CsvSource src;
  if (!obj.contains("path")) throw ConfigError("missing key at " + where + "/path");
  src.path = obj.at("path").get<std::string>();
  if (obj.contains("label_column")) {
    const auto& lc = obj.at("label_column");
    if (lc.is_number_integer())
      src.label_column = lc.get<int>();
    else if (lc.is_string())
      src.label_column = lc.get<std::string>();
    else
      throw ConfigError("bad value at " + where + "/label_column");
  }
  src.has_header = get_or<bool>(obj, "has_header", true, where);
  return src;
}

}  // namespace detail

namespace detail {
ExperimentConfig parse_config_json_impl(const nlohmann::json& root);
}

// Strict parse: unknown keys are rejected and malformed values surface as
// ConfigError with a pointer to the offending field.
inline ExperimentConfig parse_config_json(const nlohmann::json& root) {
  try {
    return detail::parse_config_json_impl(root);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline ExperimentConfig detail::parse_config_json_impl(const nlohmann::json& root) {
  using detail::get_or;
  using detail::reject_unknown_keys;
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(root, {"stream", "solver", "variants", "seeds", "output_dir"}, "");

  ExperimentConfig cfg;

  if (!root.contains("stream")) throw ConfigError("missing key at /stream");
  const auto& s = root.at("stream");
  reject_unknown_keys(s,
                      {"mode", "task_count", "labeled_fraction", "task0_size_multiplier",
                       "seed", "schedule", "samples_per_task", "rotation_deg", "separation",
                       "csv", "source_csv", "target_csv"},
                      "/stream");
  const std::string mode = get_or<std::string>(s, "mode", "toy", "/stream");
  if (mode == "toy")
    cfg.stream.mode = StreamSpec::Mode::toy;
  else if (mode == "csv_split")
    cfg.stream.mode = StreamSpec::Mode::csv_split;
  else if (mode == "mixture")
    cfg.stream.mode = StreamSpec::Mode::mixture;
  else
    throw ConfigError("bad value at /stream/mode: '" + mode + "'");

  cfg.stream.task_count = get_or<int>(s, "task_count", 4, "/stream");
  if (cfg.stream.task_count < 1) throw ConfigError("bad value at /stream/task_count");
  cfg.stream.labeled_fraction = get_or<double>(s, "labeled_fraction", 0.01, "/stream");
  if (cfg.stream.labeled_fraction <= 0 || cfg.stream.labeled_fraction > 1) {
    throw ConfigError("bad value at /stream/labeled_fraction: must be in (0,1]");
  }
  cfg.stream.task0_size_multiplier =
      get_or<double>(s, "task0_size_multiplier", 2.0, "/stream");
  if (cfg.stream.task0_size_multiplier <= 0) {
    throw ConfigError("bad value at /stream/task0_size_multiplier");
  }
  cfg.stream.seed = get_or<std::uint64_t>(s, "seed", 1, "/stream");
  cfg.stream.schedule = get_or<std::vector<double>>(s, "schedule", {}, "/stream");
  cfg.stream.samples_per_task = get_or<int>(s, "samples_per_task", 150, "/stream");
  if (cfg.stream.samples_per_task < 2) {
    throw ConfigError("bad value at /stream/samples_per_task");
  }
  cfg.stream.rotation_deg = get_or<double>(s, "rotation_deg", 30.0, "/stream");
  cfg.stream.separation = get_or<double>(s, "separation", 2.5, "/stream");
  if (cfg.stream.separation <= 0) throw ConfigError("bad value at /stream/separation");

  if (s.contains("csv")) cfg.csv = detail::parse_csv_source(s.at("csv"), "/stream/csv");
  if (s.contains("source_csv"))
    cfg.source_csv = detail::parse_csv_source(s.at("source_csv"), "/stream/source_csv");
  if (s.contains("target_csv"))
    cfg.target_csv = detail::parse_csv_source(s.at("target_csv"), "/stream/target_csv");

  if (cfg.stream.mode == StreamSpec::Mode::csv_split && !cfg.csv) {
    throw ConfigError("missing key at /stream/csv (required for csv_split mode)");
  }
  if (cfg.stream.mode == StreamSpec::Mode::mixture && (!cfg.source_csv || !cfg.target_csv)) {
    throw ConfigError("missing key at /stream/source_csv or /stream/target_csv");
  }

  if (root.contains("solver")) {
    const auto& v = root.at("solver");
    reject_unknown_keys(v,
                        {"loss", "alpha", "beta", "step0", "shrink", "max_iter", "obj_tol",
                         "knn_k", "efmdi", "epsilon", "sinkhorn_max_iter", "sinkhorn_tol",
                         "cel_bias_augment", "bound_b", "bound_delta"},
                        "/solver");
    const std::string loss = get_or<std::string>(v, "loss", "ls", "/solver");
    if (loss == "ls")
      cfg.solver.loss = LossKind::ls;
    else if (loss == "cel")
      cfg.solver.loss = LossKind::cel;
    else
      throw ConfigError("bad value at /solver/loss: '" + loss + "'");
    cfg.solver.alpha = get_or<double>(v, "alpha", 1.0, "/solver");
    if (cfg.solver.alpha < 0) throw ConfigError("bad value at /solver/alpha: must be >= 0");
    cfg.solver.beta = get_or<double>(v, "beta", 0.1, "/solver");
    if (cfg.solver.beta < 0) throw ConfigError("bad value at /solver/beta: must be >= 0");
    cfg.solver.step0 = get_or<double>(v, "step0", 0.1, "/solver");
    cfg.solver.shrink = get_or<double>(v, "shrink", 0.5, "/solver");
    cfg.solver.max_iter = get_or<int>(v, "max_iter", 1000, "/solver");
    cfg.solver.obj_tol = get_or<double>(v, "obj_tol", 1e-6, "/solver");
    cfg.solver.knn_k = get_or<int>(v, "knn_k", 10, "/solver");
    const std::string efmdi = get_or<std::string>(v, "efmdi", "kme", "/solver");
    if (efmdi == "kme")
      cfg.solver.efmdi = EncodingMethod::kme;
    else if (efmdi == "kde")
      cfg.solver.efmdi = EncodingMethod::kde;
    else
      throw ConfigError("bad value at /solver/efmdi: '" + efmdi + "'");
    cfg.solver.epsilon = get_or<double>(v, "epsilon", 1e-2, "/solver");
    cfg.solver.sinkhorn_max_iter = get_or<int>(v, "sinkhorn_max_iter", 5000, "/solver");
    cfg.solver.sinkhorn_tol = get_or<double>(v, "sinkhorn_tol", 1e-9, "/solver");
    cfg.solver.cel_bias_augment = get_or<bool>(v, "cel_bias_augment", false, "/solver");
    cfg.solver.bound_b = get_or<double>(v, "bound_b", 10.0, "/solver");
    cfg.solver.bound_delta = get_or<double>(v, "bound_delta", 0.05, "/solver");
    try {
      cfg.solver.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("bad value at /" + std::string(e.what()));
    }
  }

  if (root.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : root.at("variants")) {
      const std::string name = v.get<std::string>();
      if (name == "dal")
        cfg.variants.push_back(Variant::dal);
      else if (name == "ls_ot")
        cfg.variants.push_back(Variant::ls_ot);
      else if (name == "ls_g")
        cfg.variants.push_back(Variant::ls_g);
      else if (name == "ridge")
        cfg.variants.push_back(Variant::ridge);
      else
        throw ConfigError("bad value at /variants: '" + name + "'");
    }
  }
  if (cfg.variants.empty()) throw ConfigError("bad value at /variants: must be nonempty");

  if (root.contains("seeds")) {
    cfg.seeds = root.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (cfg.seeds.empty()) throw ConfigError("bad value at /seeds: must be nonempty");

  cfg.output_dir = get_or<std::string>(root, "output_dir", "dal_out", "");
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config_json(root);
}

// ---------------------------------------------------------------------------
// Stream construction from a config
// ---------------------------------------------------------------------------

inline TaskStream build_stream(const ExperimentConfig& cfg, std::uint64_t seed) {
  StreamSpec spec = cfg.stream;
  spec.seed = seed;
  switch (spec.mode) {
    case StreamSpec::Mode::toy:
      return gen_toy_stream(spec);
    case StreamSpec::Mode::csv_split: {
      const Dataset ds = load_csv(cfg.csv->path, cfg.csv->label_column, cfg.csv->has_header);
      return split_by_arrival(ds, spec);
    }
    case StreamSpec::Mode::mixture: {
      const Dataset src =
          load_csv(cfg.source_csv->path, cfg.source_csv->label_column, cfg.source_csv->has_header);
      const Dataset tgt =
          load_csv(cfg.target_csv->path, cfg.target_csv->label_column, cfg.target_csv->has_header);
      return sample_mixture_stream(src, tgt, spec);
    }
  }
  throw Error("build_stream: unreachable");
}

// ---------------------------------------------------------------------------
// Artifact writing
// ---------------------------------------------------------------------------

namespace detail {

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["task"] = r.task;
  j["accuracy"] = r.accuracy;
  j["labeled_count"] = r.labeled_count;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["final_objective"] = r.final_objective;
  j["u2"] = r.u2;
  j["u2_lower"] = r.u2_lower;
  j["u2_upper"] = r.u2_upper;
  j["trajectory_increment"] = r.trajectory_increment;
  j["prior_labeled_risk"] = r.prior_labeled_risk;
  j["feature_radius"] = r.feature_radius;
  j["bound_tail"] = r.bound_tail;
  j["wall_ms"] = r.wall_ms;
  return j;
}

inline std::string format_mean_std(double mean, double stdev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f(%.3f)", mean, stdev);
  return buf;
}

}  // namespace detail

struct ExperimentOutput {
  std::vector<RunRecord> records;
  std::map<std::string, std::vector<std::vector<double>>> traces;  // key variant_s<seed>_t<task>
};

// Run every (variant, seed) pair and write records.jsonl, summary.csv, and
// per-fit objective traces into out_dir. Returns 0 on success, 2 on runtime
// failure (with error_report.json describing the failure).
inline int run_experiment(const ExperimentConfig& cfg,
                          const std::string& out_override = "",
                          ExperimentOutput* capture = nullptr) {
  namespace fs = std::filesystem;
  const fs::path out_dir = out_override.empty() ? cfg.output_dir : out_override;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  try {
    std::vector<RunRecord> all_records;
    std::ostringstream jsonl;

    for (const Variant variant : cfg.variants) {
      for (const std::uint64_t seed : cfg.seeds) {
        const TaskStream stream = build_stream(cfg, seed);
        std::vector<RunRecord> recs = run_task_flow(stream, cfg.solver, variant, seed);
        for (auto& r : recs) {
          jsonl << detail::record_to_json(r).dump() << "\n";
          std::ostringstream trace;
          trace << "iter,objective\n";
          for (std::size_t i = 0; i < r.objective_trace.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", r.objective_trace[i]);
            trace << i << "," << buf << "\n";
          }
          detail::write_atomic(out_dir / ("trace_" + r.variant + "_s" +
                                          std::to_string(r.seed) + "_t" +
                                          std::to_string(r.task) + ".csv"),
                               trace.str());
          all_records.push_back(std::move(r));
        }
      }
    }

    // summary.csv: variant x task, mean(std) accuracy over seeds
    std::map<std::string, std::map<int, std::vector<double>>> acc;
    int max_task = 0;
    for (const auto& r : all_records) {
      acc[r.variant][r.task].push_back(r.accuracy);
      max_task = std::max(max_task, r.task);
    }
    std::ostringstream csv;
    csv << "variant";
    for (int t = 1; t <= max_task; ++t) csv << ",task" << t;
    csv << "\n";
    for (const Variant variant : cfg.variants) {
      const std::string name = to_string(variant);
      csv << name;
      for (int t = 1; t <= max_task; ++t) {
        const auto& vals = acc[name][t];
        double mean = 0, sd = 0;
        if (!vals.empty()) {
          for (double v : vals) mean += v;
          mean /= static_cast<double>(vals.size());
          for (double v : vals) sd += (v - mean) * (v - mean);
          sd = std::sqrt(sd / static_cast<double>(vals.size()));
        }
        csv << "," << detail::format_mean_std(mean, sd);
      }
      csv << "\n";
    }

    detail::write_atomic(out_dir / "records.jsonl", jsonl.str());
    detail::write_atomic(out_dir / "summary.csv", csv.str());
    if (capture) capture->records = std::move(all_records);
    return 0;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["stage"] = "run";
    err["message"] = e.what();
    detail::write_atomic(out_dir / "error_report.json", err.dump(2) + "\n");
    return 2;
  }
}

// Emit a synthesized stream as CSV files (one per batch) with the ground-truth
// label and the labeled-mask flag as trailing columns.
inline void write_stream_csvs(const TaskStream& stream, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (std::size_t t = 0; t < stream.batches.size(); ++t) {
    const TaskBatch& b = stream.batches[t];
    std::vector<char> is_lab(static_cast<std::size_t>(b.features.rows()), 0);
    for (Index i : b.labeled_idx) is_lab[static_cast<std::size_t>(i)] = 1;
    std::ostringstream out;
    for (Index j = 0; j < b.features.cols(); ++j) out << "f" << j << ",";
    out << "label,labeled\n";
    const auto& truth = stream.truth.batch(t);
    for (Index i = 0; i < b.features.rows(); ++i) {
      for (Index j = 0; j < b.features.cols(); ++j) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", b.features(i, j));
        out << buf << ",";
      }
      out << truth[static_cast<std::size_t>(i)] << ","
          << int(is_lab[static_cast<std::size_t>(i)]) << "\n";
    }
    detail::write_atomic(fs::path(out_dir) / ("task_" + std::to_string(t) + ".csv"),
                         out.str());
  }
}

// ---------------------------------------------------------------------------
// Diagnostics over a completed run directory
// ---------------------------------------------------------------------------

inline std::vector<nlohmann::json> load_run_records(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(run_dir) / "records.jsonl";
  std::ifstream in(path);
  if (!in) throw Error("no run artifacts in '" + run_dir + "'");
  std::vector<nlohmann::json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(nlohmann::json::parse(line));
  }
  if (records.empty()) throw Error("no run artifacts in '" + run_dir + "'");
  return records;
}

// --what trajectory: total discretized trajectory length per (variant, seed).
inline std::string diag_trajectory(const std::string& run_dir) {
  const auto records = load_run_records(run_dir);
  std::map<std::pair<std::string, std::uint64_t>, double> totals;
  for (const auto& r : records) {
    totals[{r.at("variant").get<std::string>(), r.at("seed").get<std::uint64_t>()}] +=
        r.at("trajectory_increment").get<double>();
  }
  std::ostringstream out;
  out << "variant,seed,trajectory_length\n";
  for (const auto& [key, total] : totals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", total);
    out << key.first << "," << key.second << "," << buf << "\n";
  }
  return out.str();
}

// --what u2: the bound quantity and its bracket per record.
inline std::string diag_u2(const std::string& run_dir) {
  const auto records = load_run_records(run_dir);
  std::ostringstream out;
  out << "variant,seed,task,u2,bracket_lower,bracket_upper\n";
  for (const auto& r : records) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g", r.at("u2").get<double>(),
                  r.at("u2_lower").get<double>(), r.at("u2_upper").get<double>());
    out << r.at("variant").get<std::string>() << "," << r.at("seed").get<std::uint64_t>()
        << "," << r.at("task").get<int>() << "," << buf << "\n";
  }
  return out.str();
}

}  // namespace dal
