#pragma once

// Readers and writers for the CSV artifacts a run leaves behind. Every writer
// emits shortest round-trip decimals, so read -> write reproduces the bytes.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsgc/diff.hpp"
#include "tsgc/model.hpp"

namespace tsgc {

struct EmbeddingTable {
  std::vector<std::string> ids;
  std::vector<std::optional<int>> labels;
  Matrix z;
};

/// `id,label,z_0,...,z_{H-1}`; label is empty when unknown.
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// `epoch,recon,reg,total`.
void write_history(const std::filesystem::path& path, const std::vector<LossBreakdown>& history);
std::vector<LossBreakdown> read_history(const std::filesystem::path& path);

/// `id,cluster`.
void write_assignments(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const std::vector<int>& clusters);
std::pair<std::vector<std::string>, std::vector<int>> read_assignments(const std::filesystem::path& path);

/// One integer label per line (blank lines ignored); also accepts the
/// `id,cluster` assignments format.
std::vector<int> read_label_file(const std::filesystem::path& path);

/// `k,neg_log_likelihood`.
void write_curve(const std::filesystem::path& path, const std::vector<std::pair<int, double>>& curve);

/// `cluster,size,t_0,...` with the element-wise mean of each cluster's series.
void write_cluster_means(const std::filesystem::path& path, const Dataset& ds, const std::vector<int>& clusters,
                         int k);

/// Encoder weights and mixture prior as one named-tensor checkpoint.
void write_model_checkpoint(const std::filesystem::path& path, const EncoderParams& enc, const MixturePrior& prior);

}  // namespace tsgc
