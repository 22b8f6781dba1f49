#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsgc/diff.hpp"

namespace tsgc {

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Text format: a `TSGC-CHECKPOINT 1` line, then per tensor a
/// `tensor <name> <rows> <cols>` line followed by `rows` lines of
/// space-separated shortest-form doubles. Round-trips exactly.
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

const Matrix& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

}  // namespace tsgc
