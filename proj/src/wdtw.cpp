#include "tsgc/wdtw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tsgc/common.hpp"

namespace tsgc {

WeightMode parse_weight_mode(const std::string& text) {
  if (text == "affine") return WeightMode::Affine;
  if (text == "linear") return WeightMode::Linear;
  throw Error("unknown weight mode '" + text + "' (expected affine or linear)");
}

std::string to_string(WeightMode mode) { return mode == WeightMode::Affine ? "affine" : "linear"; }

void WdtwConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("wdtw: gamma must be finite and >= 0");
  if (window < 1) throw Error("wdtw: window must be >= 1");
}

double wdtw_distance(std::span<const double> x, std::span<const double> y, const WdtwConfig& cfg,
                     std::size_t* cells_visited) {
  if (x.empty() || y.empty()) throw Error("wdtw: empty input series");
  cfg.validate();
  // Rows run over the longer series so the rolling buffers hold the shorter one.
  if (y.size() > x.size()) std::swap(x, y);
  const std::size_t rows = x.size();
  const std::size_t cols = y.size();
  const std::size_t band = std::max(cfg.window, rows - cols);

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> weights(band + 1);
  for (std::size_t d = 0; d <= band; ++d) weights[d] = cfg.weight(d);

  std::vector<double> prev(cols, inf);
  std::vector<double> curr(cols, inf);
  std::size_t visited = 0;

  {
    const std::size_t hi = std::min(cols - 1, band);
    double acc = 0.0;
    for (std::size_t j = 0; j <= hi; ++j) {
      acc += weights[j] * std::abs(x[0] - y[j]);
      curr[j] = acc;
    }
    if (hi + 1 < cols) curr[hi + 1] = inf;
    visited += hi + 1;
  }
  for (std::size_t i = 1; i < rows; ++i) {
    std::swap(prev, curr);
    const std::size_t lo = i > band ? i - band : 0;
    const std::size_t hi = std::min(cols - 1, i + band);
    const double xi = x[i];
    double left = inf;
    for (std::size_t j = lo; j <= hi; ++j) {
      const std::size_t offset = i > j ? i - j : j - i;
      const double up = prev[j];
      const double diag = j > 0 ? prev[j - 1] : inf;
      const double best = std::min(std::min(up, diag), left);
      left = best + weights[offset] * std::abs(xi - y[j]);
      curr[j] = left;
    }
    if (hi + 1 < cols) curr[hi + 1] = inf;
    visited += hi - lo + 1;
  }
  if (cells_visited) *cells_visited = visited;
  return curr[cols - 1];
}

DistanceMatrix distance_matrix(const Dataset& ds, const WdtwConfig& cfg, std::size_t workers) {
  const std::size_t n = ds.size();
  if (n < 2) throw Error("distance_matrix: need at least 2 series");
  cfg.validate();
  workers = std::max<std::size_t>(1, std::min(workers, n - 1));

  DistanceMatrix s(n);
  std::atomic<std::size_t> next_row{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto work = [&] {
    while (true) {
      const std::size_t i = next_row.fetch_add(1);
      if (i + 1 >= n) return;
      for (std::size_t j = i + 1; j < n; ++j) {
        try {
          const double d = wdtw_distance(ds.series[i].values, ds.series[j].values, cfg);
          s(i, j) = d;
          s(j, i) = d;
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mu);
          if (!first_error) {
            first_error = std::make_exception_ptr(
                Error("pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what()));
          }
          return;
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return s;
}

namespace {

std::string cache_header(std::size_t n, const WdtwConfig& cfg) {
  return "WDTW1 n=" + std::to_string(n) + " gamma=" + format_double(cfg.gamma) +
         " window=" + std::to_string(cfg.window) + " mode=" + to_string(cfg.weight_mode);
}

}  // namespace

void write_distance_cache(const std::filesystem::path& path, const DistanceMatrix& s, const WdtwConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write distance cache " + path.string());
  out << cache_header(s.n(), cfg) << '\n';
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.n(); ++j) {
      if (j) out << ',';
      out << format_double(s(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing distance cache " + path.string());
}

DistanceCache read_distance_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open distance cache " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "WDTW1") throw Error("distance cache: bad magic in " + path.string());

  std::optional<std::size_t> n;
  DistanceCache cache;
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("distance cache: malformed header field '" + kv + "'");
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    if (key == "n") n = static_cast<std::size_t>(parse_int(value));
    else if (key == "gamma") cache.cfg.gamma = parse_double(value);
    else if (key == "window") cache.cfg.window = static_cast<std::size_t>(parse_int(value));
    else if (key == "mode") cache.cfg.weight_mode = parse_weight_mode(value);
    else throw Error("distance cache: unknown header field '" + key + "'");
  }
  if (!n) throw Error("distance cache: header lacks n");

  cache.matrix = DistanceMatrix(*n);
  std::string line;
  for (std::size_t i = 0; i < *n; ++i) {
    if (!std::getline(in, line)) throw Error("distance cache: truncated at row " + std::to_string(i));
    std::size_t pos = 0;
    for (std::size_t j = 0; j < *n; ++j) {
      const auto end = line.find(',', pos);
      if ((end == std::string::npos) != (j + 1 == *n)) {
        throw Error("distance cache: row " + std::to_string(i) + " has the wrong width");
      }
      cache.matrix(i, j) =
          parse_double(std::string_view(line).substr(pos, end == std::string::npos ? end : end - pos));
      pos = end + 1;
    }
  }
  return cache;
}

std::optional<DistanceMatrix> try_load_distance_cache(const std::filesystem::path& path, std::size_t n,
                                                      const WdtwConfig& cfg) {
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  if (header != cache_header(n, cfg)) return std::nullopt;
  return read_distance_cache(path).matrix;
}

}  // namespace tsgc
