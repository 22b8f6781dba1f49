#include "tsgc/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "tsgc/checkpoint.hpp"

namespace tsgc {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(',', pos);
    out.push_back(line.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  auto out = open_out(path);
  out << "id,label";
  for (Eigen::Index h = 0; h < table.z.cols(); ++h) out << ",z_" << h;
  out << '\n';
  for (Eigen::Index i = 0; i < table.z.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out << table.ids[idx] << ',';
    if (table.labels[idx]) out << *table.labels[idx];
    for (Eigen::Index h = 0; h < table.z.cols(); ++h) out << ',' << format_double(table.z(i, h));
    out << '\n';
  }
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error("embeddings: empty file");
  strip_cr(line);
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "label") throw Error("embeddings: bad header");
  const auto h = static_cast<Eigen::Index>(header.size() - 2);
  EmbeddingTable t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw Error("embeddings: ragged row");
    t.ids.push_back(f[0]);
    t.labels.push_back(f[1].empty() ? std::nullopt : std::optional<int>(static_cast<int>(parse_int(f[1]))));
    std::vector<double> r;
    for (std::size_t c = 2; c < f.size(); ++c) r.push_back(parse_double(f[c]));
    rows.push_back(std::move(r));
  }
  t.z.resize(static_cast<Eigen::Index>(rows.size()), h);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index c = 0; c < h; ++c) t.z(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  return t;
}

void write_history(const std::filesystem::path& path, const std::vector<LossBreakdown>& history) {
  auto out = open_out(path);
  out << "epoch,recon,reg,total\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    out << e << ',' << format_double(history[e].recon) << ',' << format_double(history[e].reg) << ','
        << format_double(history[e].total) << '\n';
  }
}

std::vector<LossBreakdown> read_history(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  strip_cr(line);
  if (line != "epoch,recon,reg,total") throw Error("history: bad header");
  std::vector<LossBreakdown> out;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4 || parse_int(f[0]) != static_cast<long long>(out.size())) throw Error("history: bad row");
    out.push_back({parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  }
  return out;
}

void write_assignments(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const std::vector<int>& clusters) {
  if (ids.size() != clusters.size()) throw Error("assignments: id/cluster count mismatch");
  auto out = open_out(path);
  out << "id,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << clusters[i] << '\n';
}

std::pair<std::vector<std::string>, std::vector<int>> read_assignments(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  strip_cr(line);
  if (line != "id,cluster") throw Error("assignments: bad header");
  std::pair<std::vector<std::string>, std::vector<int>> out;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw Error("assignments: bad row");
    out.first.push_back(f[0]);
    out.second.push_back(static_cast<int>(parse_int(f[1])));
  }
  return out;
}

std::vector<int> read_label_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string first;
  std::getline(in, first);
  strip_cr(first);
  if (first == "id,cluster") return read_assignments(path).second;
  std::vector<int> out;
  std::string line = first;
  do {
    strip_cr(line);
    const auto t = trim(line);
    if (!t.empty()) out.push_back(static_cast<int>(parse_int(t)));
  } while (std::getline(in, line));
  return out;
}

void write_curve(const std::filesystem::path& path, const std::vector<std::pair<int, double>>& curve) {
  auto out = open_out(path);
  out << "k,neg_log_likelihood\n";
  for (const auto& [k, v] : curve) out << k << ',' << format_double(v) << '\n';
}

void write_cluster_means(const std::filesystem::path& path, const Dataset& ds, const std::vector<int>& clusters,
                         int k) {
  if (clusters.size() != ds.size()) throw Error("cluster means: assignment count mismatch");
  const std::size_t len = ds.max_length();
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(len, 0.0));
  std::vector<std::vector<int>> counts(static_cast<std::size_t>(k), std::vector<int>(len, 0));
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(clusters[i]);
    ++sizes[c];
    for (std::size_t t = 0; t < ds.series[i].values.size(); ++t) {
      sums[c][t] += ds.series[i].values[t];
      ++counts[c][t];
    }
  }
  auto out = open_out(path);
  out << "cluster,size";
  for (std::size_t t = 0; t < len; ++t) out << ",t_" << t;
  out << '\n';
  for (std::size_t c = 0; c < sums.size(); ++c) {
    out << c << ',' << sizes[c];
    for (std::size_t t = 0; t < len; ++t) {
      out << ',';
      if (counts[c][t] > 0) out << format_double(sums[c][t] / counts[c][t]);
    }
    out << '\n';
  }
}

void write_model_checkpoint(const std::filesystem::path& path, const EncoderParams& enc, const MixturePrior& prior) {
  std::vector<NamedTensor> tensors{
      {"w0", enc.w0.value()}, {"w_mu", enc.w_mu.value()}, {"w_sigma", enc.w_sigma.value()}};
  if (prior.pi_logits.valid()) {
    tensors.push_back({"pi_logits", prior.pi_logits.value()});
    tensors.push_back({"mu_tilde", prior.mu_tilde.value()});
    tensors.push_back({"log_var_tilde", prior.log_var_tilde.value()});
  }
  write_checkpoint(path, tensors);
}

}  // namespace tsgc
