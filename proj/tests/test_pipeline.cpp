#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "tsgc/artifacts.hpp"
#include "tsgc/checkpoint.hpp"
#include "tsgc/common.hpp"
#include "tsgc/pipeline.hpp"
#include "tsgc/synthetic.hpp"
#include "tsgc/wdtw.hpp"

using namespace tsgc;

namespace {

RunConfig quick_config(const std::filesystem::path& data, const std::filesystem::path& out) {
  RunConfig cfg;
  cfg.dataset = data.string();
  cfg.output_dir = out.string();
  cfg.znorm = true;
  cfg.alpha = 0.1;
  cfg.lr = 0.01;
  cfg.epochs = 30;
  cfg.pretrain_epochs = 20;
  cfg.hidden = 16;
  cfg.latent = 4;
  cfg.seed = 3;
  return cfg;
}

std::filesystem::path write_synthetic(const std::filesystem::path& dir, int per_class, std::uint64_t seed) {
  const auto path = dir / "syn_TRAIN.tsv";
  save_ucr(gen_synthetic(per_class, 64, seed), path);
  return path;
}

void write_prices(const std::filesystem::path& path, int tickers, int days) {
  std::ostringstream os;
  os << "date";
  for (int t = 0; t < tickers; ++t) os << ",T" << t;
  os << "\n";
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<double> price(tickers, 100.0);
  for (int d = 0; d < days; ++d) {
    os << "2024-" << (1 + d / 28 < 10 ? "0" : "") << 1 + d / 28 << "-" << (d % 28 + 1 < 10 ? "0" : "")
       << d % 28 + 1;
    for (int t = 0; t < tickers; ++t) {
      // Two regimes: half trend up, half trend down.
      price[t] *= 1.0 + (t % 2 ? -0.004 : 0.004) + g(rng);
      os << "," << format_double(price[t]);
    }
    os << "\n";
  }
  write_file(path, os.str());
}

}  // namespace

TEST_CASE("run config text") {
  RunConfig cfg;
  cfg.set("gamma", "0.35");
  cfg.set("weight_mode", "linear");
  cfg.set("split", "merged");
  cfg.set("seed", "12");
  const auto back = parse_run_config(cfg.to_text());
  CHECK(back.to_text() == cfg.to_text());
  CHECK(back.wdtw.gamma == 0.35);
  CHECK(back.wdtw.weight_mode == WeightMode::Linear);
  CHECK(back.split == Split::Merged);
  CHECK(back.to_pairs().size() == RunConfig::keys().size());

  CHECK_THROWS_WITH_AS(cfg.set("gama", "1"), doctest::Contains("unknown config key"), Error);
  CHECK_THROWS_AS(parse_run_config("alpha 0.1\n"), Error);
  CHECK_THROWS_AS(parse_run_config("window = 0\n"), Error);
  const auto parsed = parse_run_config("# comment\n\n  alpha = 0.2  \nepochs=7\n");
  CHECK(parsed.alpha == 0.2);
  CHECK(parsed.epochs == 7);
}

TEST_CASE("distance cache reuse") {
  const auto dir = test_dir("pipe_cache");
  auto cfg = quick_config(write_synthetic(dir, 4, 1), dir / "out");
  std::ostringstream log;
  const auto first = cmd_distances(cfg, log);
  CHECK_FALSE(first.cache_hit);
  const auto bytes = read_file(first.cache_path);
  CHECK(first.matrix.n() == 12);

  const auto second = cmd_distances(cfg, log);
  CHECK(second.cache_hit);
  CHECK(second.matrix == first.matrix);
  CHECK(read_file(second.cache_path) == bytes);

  cfg.wdtw.gamma = 0.3;
  const auto third = cmd_distances(cfg, log);
  CHECK_FALSE(third.cache_hit);
  CHECK_FALSE(third.matrix == first.matrix);
}

TEST_CASE("train run on labelled data") {
  const auto dir = test_dir("pipe_train");
  const auto data = write_synthetic(dir, 6, 2);
  const auto cfg = quick_config(data, dir / "a");
  std::ostringstream log;
  const auto report = cmd_train(cfg, log);
  CHECK(report.n == 18);
  CHECK(report.k == 3);
  REQUIRE(report.nmi.has_value());
  REQUIRE(report.ri.has_value());
  CHECK(*report.nmi >= 0.0);
  CHECK(*report.nmi <= 1.0);

  for (const char* f : {"edges.txt", "embeddings.csv", "history.csv", "pretrain_history.csv", "checkpoint.txt",
                        "gmm.txt", "assignments.csv", "config.txt", "report.json", "distances.csv"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / "a" / f), f);
  }

  SUBCASE("same config in a fresh directory reproduces the report") {
    auto again = cfg;
    again.output_dir = (dir / "b").string();
    const auto other = cmd_train(again, log);
    auto strip = [](const ClusteringReport& r) {
      auto copy = r;
      copy.config.clear();
      return copy.to_json(false);
    };
    CHECK(strip(other) == strip(report));
  }
  SUBCASE("the echoed config reruns to the same report") {
    const auto echoed = load_run_config(dir / "a" / "config.txt");
    CHECK(echoed.to_text() == cfg.to_text());
    const auto rerun = cmd_train(echoed, log);
    CHECK(rerun.distance_cache_hit);
    CHECK(rerun.to_json(false) == report.to_json(false));
  }
  SUBCASE("artifacts round-trip to identical bytes") {
    const auto out = dir / "a";
    const auto rt = dir / "rt";
    std::filesystem::create_directories(rt);
    write_embeddings(rt / "embeddings.csv", read_embeddings(out / "embeddings.csv"));
    CHECK(read_file(rt / "embeddings.csv") == read_file(out / "embeddings.csv"));
    write_history(rt / "history.csv", read_history(out / "history.csv"));
    CHECK(read_file(rt / "history.csv") == read_file(out / "history.csv"));
    const auto [ids, clusters] = read_assignments(out / "assignments.csv");
    write_assignments(rt / "assignments.csv", ids, clusters);
    CHECK(read_file(rt / "assignments.csv") == read_file(out / "assignments.csv"));
    write_gmm(rt / "gmm.txt", read_gmm(out / "gmm.txt"));
    CHECK(read_file(rt / "gmm.txt") == read_file(out / "gmm.txt"));
    write_edge_list(rt / "edges.txt", read_edge_list(out / "edges.txt"));
    CHECK(read_file(rt / "edges.txt") == read_file(out / "edges.txt"));
    write_checkpoint(rt / "checkpoint.txt", read_checkpoint(out / "checkpoint.txt"));
    CHECK(read_file(rt / "checkpoint.txt") == read_file(out / "checkpoint.txt"));
    const auto cache = read_distance_cache(out / "distances.csv");
    write_distance_cache(rt / "distances.csv", cache.matrix, cache.cfg);
    CHECK(read_file(rt / "distances.csv") == read_file(out / "distances.csv"));
    CHECK(read_embeddings(out / "embeddings.csv").z.rows() == 18);
  }
  SUBCASE("eval on the emitted assignments") {
    write_file(dir / "truth.txt", [&] {
      std::string s;
      for (int l : load_ucr(data, Split::Train).labels()) s += std::to_string(l) + "\n";
      return s;
    }());
    const auto e = cmd_eval(dir / "truth.txt", dir / "a" / "assignments.csv");
    CHECK(e.n == 18);
    CHECK(e.nmi == doctest::Approx(*report.nmi).epsilon(1e-15));
    CHECK(e.ri == doctest::Approx(*report.ri).epsilon(1e-15));
  }
}

TEST_CASE("stage failures name the stage") {
  const auto dir = test_dir("pipe_fail");
  auto cfg = quick_config(dir / "absent", dir / "out");
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(cmd_train(cfg, log), doctest::Contains("stage load"), Error);
  cfg = quick_config(write_synthetic(dir, 2, 1), dir / "out");
  cfg.k = 50;
  CHECK_THROWS_WITH_AS(cmd_train(cfg, log), doctest::Contains("stage"), Error);
}

TEST_CASE("unlabelled prices") {
  const auto dir = test_dir("pipe_prices");
  write_prices(dir / "prices.csv", 8, 60);
  auto cfg = quick_config(dir / "prices.csv", dir / "out");
  cfg.format = "prices";
  cfg.znorm = false;
  cfg.k = 2;
  cfg.alpha = 0.2;
  std::ostringstream log;

  SUBCASE("train reports no metrics") {
    const auto r = cmd_train(cfg, log);
    CHECK_FALSE(r.nmi.has_value());
    CHECK(r.to_json().find("\"nmi\"") == std::string::npos);
    CHECK(read_assignments(dir / "out" / "assignments.csv").second.size() == 8);
  }
  SUBCASE("stocks workflow") {
    cfg.k_min = 2;
    cfg.k_max = 5;
    const auto a = cmd_stocks(cfg, log);
    CHECK(a.assignments.size() == 8);
    CHECK(a.elbow_curve.size() == 4);
    CHECK(a.report.k >= 2);
    CHECK(a.report.k <= 5);
    CHECK(std::filesystem::exists(dir / "out" / "elbow.csv"));
    CHECK(std::filesystem::exists(dir / "out" / "cluster_means.csv"));
    auto again = cfg;
    again.output_dir = (dir / "out2").string();
    const auto b = cmd_stocks(again, log);
    CHECK(b.assignments == a.assignments);
    CHECK(b.elbow_curve == a.elbow_curve);
  }
  SUBCASE("two tickers bound k") {
    write_prices(dir / "two.csv", 2, 40);
    cfg.dataset = (dir / "two.csv").string();
    cfg.k_max = 10;
    const auto r = cmd_stocks(cfg, log);
    CHECK(r.report.k <= 2);
    CHECK(r.assignments.size() == 2);
  }
}

TEST_CASE("synthetic generator") {
  const auto ds = gen_synthetic(20, 100, 4);
  CHECK(ds.size() == 60);
  CHECK(ds.num_classes == 3);
  CHECK(ds.series[0].length() == 100);

  const auto clean = gen_synthetic(3, 32, 1, 0.0);
  for (std::size_t i = 0; i < clean.size(); ++i)
    for (std::size_t j = 0; j < clean.size(); ++j)
      if (clean.series[i].label == clean.series[j].label) CHECK(clean.series[i].values == clean.series[j].values);

  CHECK_THROWS_AS(gen_synthetic(1, 100, 0), Error);
  CHECK_THROWS_AS(gen_synthetic(5, 15, 0), Error);

  // Classic DTW: a sine is closer to its own class than to the others, on average.
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = gen_synthetic(4, 64, seed);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.series[i].label != 0) continue;
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (i == j) continue;
        const double v = wdtw_distance(d.series[i].values, d.series[j].values, {0.0, 64, WeightMode::Affine});
        if (d.series[j].label == 0) {
          within += v;
          ++nw;
        } else {
          between += v;
          ++nb;
        }
      }
    }
  }
  CHECK(within / nw < between / nb);
}

TEST_CASE("label files") {
  const auto dir = test_dir("labels");
  write_file(dir / "a.txt", "0\n1\n\n1\n");
  CHECK(read_label_file(dir / "a.txt") == std::vector<int>{0, 1, 1});
  write_file(dir / "b.csv", "id,cluster\nx,2\ny,0\n");
  CHECK(read_label_file(dir / "b.csv") == std::vector<int>{2, 0});
  write_file(dir / "c.txt", "0\n1\n0\n");
  const auto e = cmd_eval(dir / "a.txt", dir / "c.txt");
  CHECK(e.n == 3);
  CHECK(e.ri == doctest::Approx(1.0 / 3.0));
  write_file(dir / "d.txt", "0\n1\n");
  CHECK_THROWS_AS(cmd_eval(dir / "a.txt", dir / "d.txt"), Error);
}
