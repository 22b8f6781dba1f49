#include "tsgc/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace tsgc {

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << "TSGC-CHECKPOINT 1\n";
  for (const auto& t : tensors) {
    if (t.name.empty() || t.name.find_first_of(" \t\n") != std::string::npos) {
      throw Error("checkpoint: invalid tensor name '" + t.name + "'");
    }
    out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(t.value(r, c));
      }
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "TSGC-CHECKPOINT 1") throw Error("checkpoint: bad header");
  std::vector<NamedTensor> tensors;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream hs(line);
    std::string tag;
    NamedTensor t;
    Eigen::Index rows = 0, cols = 0;
    if (!(hs >> tag >> t.name >> rows >> cols) || tag != "tensor" || rows < 0 || cols < 0) {
      throw Error("checkpoint: bad tensor header '" + line + "'");
    }
    t.value.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw Error("checkpoint: truncated tensor " + t.name);
      std::istringstream ls(line);
      std::string field;
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(ls >> field)) throw Error("checkpoint: short row in tensor " + t.name);
        t.value(r, c) = parse_double(field);
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

const Matrix& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw Error("checkpoint: no tensor named '" + name + "'");
}

}  // namespace tsgc
