#include "tsgc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsgc/common.hpp"

namespace tsgc {

std::size_t AdjacencyView::edge_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) count += a[i * n + j];
  return count;
}

std::size_t AdjacencyView::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n; ++j) d += a[i * n + j];
  return d;
}

double threshold_from_density(const DistanceMatrix& s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  const std::size_t n = s.n();
  if (n < 2) throw Error("threshold_from_density: need n >= 2");
  std::vector<double> off;
  off.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) off.push_back(s(i, j));
  const auto total = off.size();
  auto k = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(total)));
  k = std::min(k, total - 1);
  std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(k), off.end());
  return off[k];
}

AdjacencyView build_adjacency(const DistanceMatrix& s, double delta) {
  if (std::isnan(delta)) throw Error("build_adjacency: delta is NaN");
  AdjacencyView view;
  view.n = s.n();
  view.delta = delta;
  view.a.assign(view.n * view.n, 0);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < view.n; ++i) {
    for (std::size_t j = i + 1; j < view.n; ++j) {
      // Decided once per unordered pair so the result is symmetric even if S is not.
      const bool link = s(i, j) < delta;
      view.a[i * view.n + j] = link;
      view.a[j * view.n + i] = link;
      ones += link ? 2 : 0;
    }
  }
  const double offdiag = static_cast<double>(view.n) * static_cast<double>(view.n - 1);
  view.alpha_achieved = view.n > 1 ? static_cast<double>(ones) / offdiag : 0.0;
  return view;
}

AdjacencyView adjacency_from_density(const DistanceMatrix& s, double alpha) {
  auto view = build_adjacency(s, threshold_from_density(s, alpha));
  view.alpha_target = alpha;
  return view;
}

NormalizedAdjacency normalize_adjacency(const AdjacencyView& a) {
  const std::size_t n = a.n;
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(a.degree(i) + 1));
  }
  NormalizedAdjacency out;
  out.n = n;
  out.m.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool linked = i == j || a.edge(i, j);
      if (linked) out.m[i * n + j] = inv_sqrt_deg[i] * inv_sqrt_deg[j];
    }
  }
  return out;
}

void write_edge_list(const std::filesystem::path& path, const AdjacencyView& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write edge list " + path.string());
  out << "# n=" << a.n << " delta=" << format_double(a.delta) << " alpha=" << format_double(a.alpha_target)
      << " alpha_achieved=" << format_double(a.alpha_achieved) << '\n';
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = i + 1; j < a.n; ++j)
      if (a.edge(i, j)) out << i << ' ' << j << '\n';
}

AdjacencyView read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open edge list " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# ", 0) != 0) throw Error("edge list: missing header");
  AdjacencyView view;
  bool have_n = false;
  std::istringstream hs(line.substr(2));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("edge list: malformed header");
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    if (key == "n") {
      view.n = static_cast<std::size_t>(parse_int(value));
      have_n = true;
    } else if (key == "delta") {
      view.delta = parse_double(value);
    } else if (key == "alpha") {
      view.alpha_target = parse_double(value);
    } else if (key == "alpha_achieved") {
      view.alpha_achieved = parse_double(value);
    }
  }
  if (!have_n) throw Error("edge list: header lacks n");
  view.a.assign(view.n * view.n, 0);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::size_t i = 0, j = 0;
    if (!(ls >> i >> j) || i >= j || j >= view.n) throw Error("edge list: bad edge '" + line + "'");
    view.a[i * view.n + j] = 1;
    view.a[j * view.n + i] = 1;
  }
  return view;
}

}  // namespace tsgc
