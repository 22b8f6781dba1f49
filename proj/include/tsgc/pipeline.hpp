#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsgc/dataset.hpp"
#include "tsgc/model.hpp"
#include "tsgc/wdtw.hpp"

namespace tsgc {

/// Every user-facing knob of a run. Serialized as flat `key = value` text;
/// unknown keys are rejected.
struct RunConfig {
  std::string dataset;
  std::string format = "ucr";  // ucr | prices
  Split split = Split::Train;
  bool znorm = false;
  PriceNormalization normalize = PriceNormalization::ZScore;

  WdtwConfig wdtw;
  double alpha = 0.05;

  double lambda = 0.001;
  double lr = 1e-4;
  int epochs = 500;
  int pretrain_epochs = 100;
  int hidden = 32;
  int latent = 16;
  double dropout = 0.01;
  int k = 0;  // 0: take K from the dataset labels
  std::uint64_t seed = 0;
  bool eval_on_mu = true;
  bool pos_weight = false;

  int gmm_restarts = 5;
  int gmm_max_iters = 200;
  double gmm_tol = 1e-6;

  int k_min = 2;
  int k_max = 10;

  int workers = 1;
  std::string distance_cache;  // empty: <output_dir>/distances.csv
  std::string output_dir = "tsgc_out";

  /// Keys in a fixed order, values as written in a config file.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
  std::string to_text() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stage seeds derived from the master seed.
TrainConfig make_train_config(const RunConfig& cfg, int k);
GmmConfig make_cluster_gmm_config(const RunConfig& cfg);

struct StageTimings {
  std::vector<std::pair<std::string, double>> seconds;
};

struct ClusteringReport {
  std::string dataset;
  std::string split;
  std::size_t n = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<double> nmi;
  std::optional<double> ri;
  double alpha_target = 0.0;
  double alpha_achieved = 0.0;
  double delta = 0.0;
  LossBreakdown final_loss;
  bool distance_cache_hit = false;
  StageTimings timings;

  /// Stable key order. `include_timings=false` drops the run-environment
  /// fields (timings, cache hit) and leaves only what a rerun reproduces.
  std::string to_json(bool include_timings = true) const;
};

Dataset load_dataset(const RunConfig& cfg, std::vector<std::string>* warnings = nullptr);

struct DistanceOutcome {
  DistanceMatrix matrix;
  std::filesystem::path cache_path;
  bool cache_hit = false;
  double seconds = 0.0;
};

/// Reuses the cache file when its header matches, otherwise computes and writes it.
DistanceOutcome compute_or_load_distances(const Dataset& ds, const RunConfig& cfg);

DistanceOutcome cmd_distances(const RunConfig& cfg, std::ostream& log);
ClusteringReport cmd_train(const RunConfig& cfg, std::ostream& log);

struct StocksOutcome {
  ClusteringReport report;
  std::vector<int> assignments;
  std::vector<std::pair<int, double>> elbow_curve;
};
StocksOutcome cmd_stocks(const RunConfig& cfg, std::ostream& log);

struct EvalOutcome {
  std::size_t n = 0;
  double nmi = 0.0;
  double ri = 0.0;
  std::string to_json() const;
};
EvalOutcome cmd_eval(const std::filesystem::path& truth, const std::filesystem::path& pred);

}  // namespace tsgc
