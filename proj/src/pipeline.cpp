#include "tsgc/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "tsgc/artifacts.hpp"
#include "tsgc/gmm.hpp"
#include "tsgc/graph.hpp"
#include "tsgc/metrics.hpp"

namespace tsgc {
namespace {

using Clock = std::chrono::steady_clock;

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("not a boolean: '" + v + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

int to_int(const std::string& v) { return static_cast<int>(parse_int(v)); }

template <typename F>
auto run_stage(const char* name, StageTimings& timings, F&& fn) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings.seconds.emplace_back(name, std::chrono::duration<double>(Clock::now() - start).count());
    } else {
      auto result = fn();
      timings.seconds.emplace_back(name, std::chrono::duration<double>(Clock::now() - start).count());
      return result;
    }
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

std::vector<std::string> series_ids(const Dataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds.series) ids.push_back(s.id);
  return ids;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "dataset", "format", "split", "znorm", "normalize", "gamma", "window", "weight_mode", "alpha",
      "lambda", "lr", "epochs", "pretrain_epochs", "hidden", "latent", "dropout", "k", "seed", "eval_on_mu",
      "pos_weight", "gmm_restarts", "gmm_max_iters", "gmm_tol", "k_min", "k_max", "workers", "distance_cache",
      "output_dir"};
  return k;
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
  return {
      {"dataset", dataset},
      {"format", format},
      {"split", to_string(split)},
      {"znorm", bool_text(znorm)},
      {"normalize", to_string(normalize)},
      {"gamma", format_double(wdtw.gamma)},
      {"window", std::to_string(wdtw.window)},
      {"weight_mode", to_string(wdtw.weight_mode)},
      {"alpha", format_double(alpha)},
      {"lambda", format_double(lambda)},
      {"lr", format_double(lr)},
      {"epochs", std::to_string(epochs)},
      {"pretrain_epochs", std::to_string(pretrain_epochs)},
      {"hidden", std::to_string(hidden)},
      {"latent", std::to_string(latent)},
      {"dropout", format_double(dropout)},
      {"k", std::to_string(k)},
      {"seed", std::to_string(seed)},
      {"eval_on_mu", bool_text(eval_on_mu)},
      {"pos_weight", bool_text(pos_weight)},
      {"gmm_restarts", std::to_string(gmm_restarts)},
      {"gmm_max_iters", std::to_string(gmm_max_iters)},
      {"gmm_tol", format_double(gmm_tol)},
      {"k_min", std::to_string(k_min)},
      {"k_max", std::to_string(k_max)},
      {"workers", std::to_string(workers)},
      {"distance_cache", distance_cache},
      {"output_dir", output_dir},
  };
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "format") {
    if (value != "ucr" && value != "prices") throw Error("format must be ucr or prices");
    format = value;
  } else if (key == "split") split = parse_split(value);
  else if (key == "znorm") znorm = parse_bool(value);
  else if (key == "normalize") normalize = parse_price_normalization(value);
  else if (key == "gamma") wdtw.gamma = parse_double(value);
  else if (key == "window") {
    const auto w = parse_int(value);
    if (w < 1) throw Error("window must be >= 1");
    wdtw.window = static_cast<std::size_t>(w);
  } else if (key == "weight_mode") wdtw.weight_mode = parse_weight_mode(value);
  else if (key == "alpha") alpha = parse_double(value);
  else if (key == "lambda") lambda = parse_double(value);
  else if (key == "lr") lr = parse_double(value);
  else if (key == "epochs") epochs = to_int(value);
  else if (key == "pretrain_epochs") pretrain_epochs = to_int(value);
  else if (key == "hidden") hidden = to_int(value);
  else if (key == "latent") latent = to_int(value);
  else if (key == "dropout") dropout = parse_double(value);
  else if (key == "k") k = to_int(value);
  else if (key == "seed") {
    const auto s = parse_int(value);
    if (s < 0) throw Error("seed must be >= 0");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "eval_on_mu") eval_on_mu = parse_bool(value);
  else if (key == "pos_weight") pos_weight = parse_bool(value);
  else if (key == "gmm_restarts") gmm_restarts = to_int(value);
  else if (key == "gmm_max_iters") gmm_max_iters = to_int(value);
  else if (key == "gmm_tol") gmm_tol = parse_double(value);
  else if (key == "k_min") k_min = to_int(value);
  else if (key == "k_max") k_max = to_int(value);
  else if (key == "workers") workers = to_int(value);
  else if (key == "distance_cache") distance_cache = value;
  else if (key == "output_dir") output_dir = value;
  else throw Error("unknown config key '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_pairs()) out += k + " = " + v + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

TrainConfig make_train_config(const RunConfig& cfg, int k) {
  const SeedStream root(cfg.seed);
  TrainConfig t;
  t.lambda = cfg.lambda;
  t.lr = cfg.lr;
  t.epochs = cfg.epochs;
  t.pretrain_epochs = cfg.pretrain_epochs;
  t.hidden = cfg.hidden;
  t.latent = cfg.latent;
  t.dropout_p = cfg.dropout;
  t.k = k;
  t.seed = root.split("train").seed();
  t.eval_on_mu = cfg.eval_on_mu;
  t.pos_weight = cfg.pos_weight;
  t.gmm.restarts = cfg.gmm_restarts;
  t.gmm.max_iters = cfg.gmm_max_iters;
  t.gmm.tol = cfg.gmm_tol;
  return t;
}

GmmConfig make_cluster_gmm_config(const RunConfig& cfg) {
  GmmConfig g;
  g.restarts = cfg.gmm_restarts;
  g.max_iters = cfg.gmm_max_iters;
  g.tol = cfg.gmm_tol;
  g.seed = SeedStream(cfg.seed).split("cluster").seed();
  return g;
}

std::string ClusteringReport::to_json(bool include_timings) const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["split"] = split;
  j["n"] = n;
  j["k"] = k;
  j["seed"] = seed;
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config) c[key] = value;
  j["config"] = c;
  if (nmi) j["nmi"] = *nmi;
  if (ri) j["ri"] = *ri;
  j["alpha_target"] = alpha_target;
  j["alpha_achieved"] = alpha_achieved;
  j["delta"] = delta;
  j["final_loss"] = {{"recon", final_loss.recon}, {"reg", final_loss.reg}, {"total", final_loss.total}};
  if (include_timings) {
    j["distance_cache_hit"] = distance_cache_hit;
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& [stage, s] : timings.seconds) t[stage] = s;
    j["timings_s"] = t;
  }
  return j.dump(2);
}

std::string EvalOutcome::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["nmi"] = nmi;
  j["ri"] = ri;
  return j.dump(2);
}

Dataset load_dataset(const RunConfig& cfg, std::vector<std::string>* warnings) {
  if (cfg.dataset.empty()) throw Error("no dataset given");
  Dataset ds = cfg.format == "prices" ? load_price_csv(cfg.dataset, cfg.normalize, warnings)
                                      : load_ucr(cfg.dataset, cfg.split);
  if (cfg.znorm) ds = znormalize(ds);
  ds.validate();
  return ds;
}

DistanceOutcome compute_or_load_distances(const Dataset& ds, const RunConfig& cfg) {
  DistanceOutcome out;
  out.cache_path = cfg.distance_cache.empty() ? std::filesystem::path(cfg.output_dir) / "distances.csv"
                                              : std::filesystem::path(cfg.distance_cache);
  const auto start = Clock::now();
  if (auto cached = try_load_distance_cache(out.cache_path, ds.size(), cfg.wdtw)) {
    out.matrix = std::move(*cached);
    out.cache_hit = true;
  } else {
    out.matrix = distance_matrix(ds, cfg.wdtw, static_cast<std::size_t>(std::max(1, cfg.workers)));
    if (out.cache_path.has_parent_path()) std::filesystem::create_directories(out.cache_path.parent_path());
    write_distance_cache(out.cache_path, out.matrix, cfg.wdtw);
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

DistanceOutcome cmd_distances(const RunConfig& cfg, std::ostream& log) {
  StageTimings t;
  const Dataset ds = run_stage("load", t, [&] { return load_dataset(cfg); });
  auto out = run_stage("distances", t, [&] { return compute_or_load_distances(ds, cfg); });
  log << "n=" << ds.size() << " cache=" << out.cache_path.string() << (out.cache_hit ? " (hit)" : " (computed)")
      << " seconds=" << out.seconds << '\n';
  return out;
}

namespace {

struct GraphStage {
  Dataset ds;
  DistanceOutcome distances;
  AdjacencyView adjacency;
};

GraphStage build_graph_stage(const RunConfig& cfg, StageTimings& t, std::ostream& log) {
  GraphStage g;
  std::vector<std::string> warnings;
  g.ds = run_stage("load", t, [&] { return load_dataset(cfg, &warnings); });
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  std::filesystem::create_directories(cfg.output_dir);
  g.distances = run_stage("distances", t, [&] { return compute_or_load_distances(g.ds, cfg); });
  g.adjacency = run_stage("graph", t, [&] { return adjacency_from_density(g.distances.matrix, cfg.alpha); });
  write_edge_list(std::filesystem::path(cfg.output_dir) / "edges.txt", g.adjacency);
  return g;
}

ClusteringReport base_report(const RunConfig& cfg, const GraphStage& g) {
  ClusteringReport r;
  r.dataset = g.ds.name;
  r.split = cfg.format == "prices" ? "all" : to_string(cfg.split);
  r.n = g.ds.size();
  r.seed = cfg.seed;
  r.config = cfg.to_pairs();
  r.alpha_target = g.adjacency.alpha_target;
  r.alpha_achieved = g.adjacency.alpha_achieved;
  r.delta = g.adjacency.delta;
  r.distance_cache_hit = g.distances.cache_hit;
  return r;
}

void write_run_artifacts(const RunConfig& cfg, const Dataset& ds, const TrainResult& tr,
                         const ClusterResult& clusters) {
  const std::filesystem::path dir(cfg.output_dir);
  EmbeddingTable table;
  table.ids = series_ids(ds);
  for (const auto& s : ds.series) table.labels.push_back(s.label);
  table.z = tr.embeddings;
  write_embeddings(dir / "embeddings.csv", table);
  write_history(dir / "history.csv", tr.history);
  write_history(dir / "pretrain_history.csv", tr.pretrain_history);
  write_model_checkpoint(dir / "checkpoint.txt", tr.encoder, tr.prior);
  write_gmm(dir / "gmm.txt", clusters.gmm);
  write_assignments(dir / "assignments.csv", table.ids, clusters.assignments);
  write_text(dir / "config.txt", cfg.to_text());
}

}  // namespace

ClusteringReport cmd_train(const RunConfig& cfg, std::ostream& log) {
  StageTimings t;
  const GraphStage g = build_graph_stage(cfg, t, log);
  int k = cfg.k;
  if (k <= 0) {
    if (!g.ds.num_classes) throw Error("K not given and the dataset has no labels");
    k = *g.ds.num_classes;
  }
  const TrainResult tr = run_stage("train", t, [&] { return train(g.ds, g.adjacency, make_train_config(cfg, k)); });
  const ClusterResult clusters =
      run_stage("cluster", t, [&] { return cluster(tr.embeddings, k, make_cluster_gmm_config(cfg)); });

  ClusteringReport r = base_report(cfg, g);
  r.k = k;
  if (!tr.history.empty()) r.final_loss = tr.history.back();
  else if (!tr.pretrain_history.empty()) r.final_loss = tr.pretrain_history.back();
  if (g.ds.has_labels()) {
    const auto truth = g.ds.labels();
    r.nmi = nmi(truth, clusters.assignments);
    r.ri = rand_index(truth, clusters.assignments);
  }
  run_stage("write", t, [&] { write_run_artifacts(cfg, g.ds, tr, clusters); });
  r.timings = t;
  write_text(std::filesystem::path(cfg.output_dir) / "report.json", r.to_json() + "\n");
  return r;
}

StocksOutcome cmd_stocks(const RunConfig& cfg, std::ostream& log) {
  StageTimings t;
  RunConfig run = cfg;
  run.format = "prices";
  const GraphStage g = build_graph_stage(run, t, log);
  const int n = static_cast<int>(g.ds.size());
  const int k_hi = std::min(run.k_max, n);
  const int k_lo = std::min(std::max(1, run.k_min), k_hi);
  std::vector<int> k_range;
  for (int k = k_lo; k <= k_hi; ++k) k_range.push_back(k);

  Trainer trainer(g.ds, g.adjacency, make_train_config(run, k_lo));
  run_stage("pretrain", t, [&] { trainer.pretrain(); });
  GmmConfig elbow_cfg = make_cluster_gmm_config(run);
  elbow_cfg.seed = SeedStream(run.seed).split("elbow").seed();
  const ElbowResult elbow = run_stage("elbow", t, [&] { return elbow_select_k(trainer.embed(), k_range, elbow_cfg); });
  const int k = run.k > 0 ? std::min(run.k, n) : elbow.k;
  log << "elbow selected k=" << elbow.k << (run.k > 0 ? " (overridden by config)" : "") << '\n';
  run_stage("train", t, [&] {
    trainer.init_prior(k);
    trainer.fit();
  });
  const TrainResult tr = trainer.result();
  const ClusterResult clusters =
      run_stage("cluster", t, [&] { return cluster(tr.embeddings, k, make_cluster_gmm_config(run)); });

  StocksOutcome out;
  out.report = base_report(run, g);
  out.report.k = k;
  if (!tr.history.empty()) out.report.final_loss = tr.history.back();
  out.assignments = clusters.assignments;
  out.elbow_curve = elbow.curve;
  run_stage("write", t, [&] {
    const std::filesystem::path dir(run.output_dir);
    write_run_artifacts(run, g.ds, tr, clusters);
    write_curve(dir / "elbow.csv", elbow.curve);
    write_cluster_means(dir / "cluster_means.csv", g.ds, clusters.assignments, k);
  });
  out.report.timings = t;
  write_text(std::filesystem::path(run.output_dir) / "report.json", out.report.to_json() + "\n");
  return out;
}

EvalOutcome cmd_eval(const std::filesystem::path& truth_path, const std::filesystem::path& pred_path) {
  const auto truth = read_label_file(truth_path);
  const auto pred = read_label_file(pred_path);
  EvalOutcome out;
  out.n = truth.size();
  out.nmi = nmi(truth, pred);
  out.ri = rand_index(truth, pred);
  return out;
}

}  // namespace tsgc
