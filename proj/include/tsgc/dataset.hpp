#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tsgc {

struct TimeSeries {
  std::string id;
  std::vector<double> values;
  std::optional<int> label;

  std::size_t length() const { return values.size(); }
};

struct Dataset {
  std::string name;
  std::vector<TimeSeries> series;
  std::optional<int> num_classes;

  std::size_t size() const { return series.size(); }
  bool has_labels() const;
  /// Labels in series order; throws if any series is unlabeled.
  std::vector<int> labels() const;
  std::size_t max_length() const;
  /// Throws unless the dataset is usable for clustering (n >= 2, labels in range).
  void validate() const;
};

enum class Split { Train, Test, Merged };
enum class PriceNormalization { None, ZScore, FirstValue };

Split parse_split(const std::string& text);
std::string to_string(Split split);
PriceNormalization parse_price_normalization(const std::string& text);
std::string to_string(PriceNormalization mode);

/// Reads a single UCR-format text file (label first, then values; tab or
/// comma separated). Labels are remapped to 0..K-1 in order of first
/// appearance.
Dataset load_ucr_file(const std::filesystem::path& path);

/// `path` may name a split file directly or the dataset stem
/// (e.g. `data/Meat/Meat`), in which case `_TRAIN`/`_TEST` suffixes with
/// `.tsv`, `.txt` or no extension are tried. Merged concatenates train then
/// test with one shared label map.
Dataset load_ucr(const std::filesystem::path& path, Split split);

/// Price CSV with header `date,ticker1,...`, one column per instrument.
/// Date rows with any missing price are dropped (reported via `warnings`),
/// out-of-order dates only warn. A column with fewer than 2 finite values is an
/// error.
Dataset load_price_csv(const std::filesystem::path& path, PriceNormalization normalize,
                       std::vector<std::string>* warnings = nullptr);

TimeSeries znormalize(const TimeSeries& series);
Dataset znormalize(const Dataset& ds);

/// Writes `ds` in UCR tab-separated form. Labels are required.
void save_ucr(const Dataset& ds, const std::filesystem::path& path);

}  // namespace tsgc
